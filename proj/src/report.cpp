#include "ergolab/report.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace ergolab {

namespace fs = std::filesystem;

namespace {

std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

std::string json_matrix(const std::vector<std::vector<double>>& m) {
    std::string out = "[";
    for (size_t i = 0; i < m.size(); ++i) {
        if (i) out += ", ";
        out += json_array(m[i]);
    }
    return out + "]";
}

// Short form for tables only; artifacts stay on format_double.
std::string fmt6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string pad(std::string s, size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
}

struct SummaryRow {
    std::string check, source;
    double measured = 0.0, bound = 0.0, tolerance = 0.0, runtime_s = 0.0;
    uint64_t seed = 0;
    bool pass = false;
};

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

uint64_t fnv1a64(const std::string& bytes) {
    uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string json_number(double v) {
    return std::isfinite(v) ? format_double(v) : std::string("null");
}

std::string json_array(const std::vector<double>& v) {
    std::string out = "[";
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += json_number(v[i]);
    }
    return out + "]";
}

std::string csv_path_batch(const PathBatch& paths) {
    std::string out = "time,traj,dim,value\n";
    for (int j = 0; j < paths.batch(); ++j) {
        const auto& xj = paths.x[size_t(j)];
        const auto& uj = paths.u[size_t(j)];
        for (size_t k = 0; k < xj.size(); ++k) {
            const std::string t = format_double(paths.t[k]);
            out += t + "," + std::to_string(j) + ",0," + format_double(xj[k]) + "\n";
            if (k < uj.size())
                out += t + "," + std::to_string(j) + ",1," + format_double(uj[k]) + "\n";
        }
    }
    return out;
}

std::string csv_exit_samples(const std::vector<ExitSample>& samples) {
    std::string out = "traj,tau,side,location,censored\n";
    for (const auto& s : samples) {
        out += std::to_string(s.traj) + "," + format_double(s.tau) + "," +
               std::to_string(s.side) + "," + format_double(s.location) + "," +
               (s.censored ? "1" : "0") + "\n";
    }
    return out;
}

std::string csv_hjb(const HjbSolution& sol) {
    std::string out = "x,phi,u_star\n";
    for (size_t i = 0; i < sol.x.size(); ++i) {
        out += format_double(sol.x[i]) + "," + format_double(sol.phi[i]) + "," +
               format_double(sol.policy.barycenter_at_node(int(i))) + "\n";
    }
    return out;
}

std::string csv_histogram(const OccupationHistogram& hist) {
    std::string out = "bin_lo,bin_hi,mass\n";
    for (int i = 0; i < hist.bins(); ++i) {
        out += format_double(hist.edges[size_t(i)]) + "," +
               format_double(hist.edges[size_t(i) + 1]) + "," +
               format_double(hist.mass[size_t(i)]) + "\n";
    }
    return out;
}

std::string csv_estimate(const ErgodicEstimate& est) {
    return "rho,se,T,burn_in,batch,excluded\n" + format_double(est.rho) + "," +
           format_double(est.se) + "," + format_double(est.T) + "," +
           format_double(est.burn_in) + "," + std::to_string(est.batch) + "," +
           std::to_string(est.excluded) + "\n";
}

std::string csv_xy(const std::string& header, const std::vector<double>& x,
                   const std::vector<double>& y) {
    if (x.size() != y.size()) throw DataError("csv_xy: column length mismatch");
    std::string out = header + "\n";
    for (size_t i = 0; i < x.size(); ++i)
        out += format_double(x[i]) + "," + format_double(y[i]) + "\n";
    return out;
}

std::string json_hjb_scalars(const HjbSolution& sol, double eps, uint64_t seed) {
    std::string out = "{\n";
    out += "  \"rho_eps\": " + json_number(sol.rho) + ",\n";
    out += "  \"sweeps\": " + std::to_string(sol.sweeps) + ",\n";
    out += "  \"residual\": " + json_number(sol.residual) + ",\n";
    out += "  \"converged\": " + std::string(sol.converged ? "true" : "false") + ",\n";
    out += "  \"eps\": " + json_number(eps) + ",\n";
    out += "  \"seed\": " + std::to_string(seed) + "\n";
    return out + "}\n";
}

std::string json_estimate(const ErgodicEstimate& est, uint64_t seed) {
    std::string out = "{\n";
    out += "  \"rho\": " + json_number(est.rho) + ",\n";
    out += "  \"se\": " + json_number(est.se) + ",\n";
    out += "  \"T\": " + json_number(est.T) + ",\n";
    out += "  \"burn_in\": " + json_number(est.burn_in) + ",\n";
    out += "  \"batch\": " + std::to_string(est.batch) + ",\n";
    out += "  \"excluded\": " + std::to_string(est.excluded) + ",\n";
    out += "  \"seed\": " + std::to_string(seed) + "\n";
    return out + "}\n";
}

std::string json_decomposition(const WellDecomposition& wells) {
    std::vector<double> depths;
    for (size_t i = 0; i < wells.minima.size(); ++i)
        depths.push_back(std::min(wells.depth_left[i], wells.depth_right[i]));
    std::string deep = "[";
    for (size_t i = 0; i < wells.deep.size(); ++i) {
        if (i) deep += ", ";
        deep += std::to_string(wells.deep[i]);
    }
    deep += "]";

    std::string out = "{\n";
    out += "  \"minima\": " + json_array(wells.minima) + ",\n";
    out += "  \"maxima\": " + json_array(wells.maxima) + ",\n";
    out += "  \"depths\": " + json_array(depths) + ",\n";
    out += "  \"lambda\": " + json_number(wells.lambda) + ",\n";
    out += "  \"deep_wells\": " + deep + "\n";
    return out + "}\n";
}

std::string json_chain(const TunnelChain& chain) {
    std::string out = "{\n";
    out += "  \"states\": " + json_array(chain.states) + ",\n";
    out += "  \"Q\": " + json_matrix(chain.Q) + ",\n";
    out += "  \"mu\": " + json_array(chain.mu) + ",\n";
    out += "  \"lambda\": " + json_array(chain.lambda) + ",\n";
    out += "  \"p\": " + json_matrix(chain.p) + "\n";
    return out + "}\n";
}

std::string jsonl_reports(const std::vector<VerificationReport>& reports) {
    std::string out;
    for (const auto& r : reports) {
        out += "{\"check\": \"" + json_escape(r.check) + "\", \"claim\": \"" +
               json_escape(r.claim) + "\", \"measured\": " + json_number(r.measured) +
               ", \"bound\": " + json_number(r.bound) +
               ", \"tolerance\": " + json_number(r.tolerance) +
               ", \"pass\": " + (r.pass ? "true" : "false") +
               ", \"runtime_s\": " + json_number(r.runtime_s) +
               ", \"seed\": " + std::to_string(r.seed) + ", \"detail\": \"" +
               json_escape(r.detail) + "\"}\n";
    }
    return out;
}

std::string text_summary(const std::vector<VerificationReport>& reports) {
    size_t w = 12;
    for (const auto& r : reports) w = std::max(w, r.check.size());
    std::ostringstream out;
    int fails = 0;
    for (const auto& r : reports) {
        out << (r.pass ? "PASS  " : "FAIL  ") << pad(r.check, w + 2) << "measured="
            << fmt6(r.measured) << "  bound=" << fmt6(r.bound) << "  tol="
            << fmt6(r.tolerance) << "  t=" << fmt6(r.runtime_s) << "s  seed=" << r.seed
            << "\n";
        out << "      claim: " << r.claim << "\n";
        if (!r.detail.empty()) out << "      " << r.detail << "\n";
        fails += r.pass ? 0 : 1;
    }
    out << reports.size() << " checks, " << (reports.size() - size_t(fails)) << " passed, "
        << fails << " failed\n";
    return out.str();
}

ArtifactWriter::ArtifactWriter(std::string outdir) : outdir_(std::move(outdir)) {
    std::error_code ec;
    fs::create_directories(outdir_, ec);
    if (ec) throw DataError("cannot create output directory " + outdir_ + ": " + ec.message());
}

void ArtifactWriter::write_text(const std::string& name, const std::string& bytes) {
    fs::path target = fs::path(outdir_) / name;
    if (target.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
    }
    std::ofstream out(target, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + target.string());
    out << bytes;
    out.close();
    entries_.push_back({name, bytes.size(), fnv1a64(bytes)});
}

void ArtifactWriter::finalize(const std::string& command, uint64_t seed) {
    std::string out = "{\n";
    out += "  \"command\": \"" + json_escape(command) + "\",\n";
    out += "  \"seed\": " + std::to_string(seed) + ",\n";
    out += "  \"files\": [\n";
    for (size_t i = 0; i < entries_.size(); ++i) {
        char hex[24];
        std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(entries_[i].hash));
        out += "    {\"path\": \"" + json_escape(entries_[i].path) +
               "\", \"bytes\": " + std::to_string(entries_[i].bytes) + ", \"fnv1a64\": \"" +
               hex + "\"}";
        out += (i + 1 < entries_.size()) ? ",\n" : "\n";
    }
    out += "  ]\n}\n";

    fs::path target = fs::path(outdir_) / "manifest.json";
    std::ofstream man(target, std::ios::binary | std::ios::trunc);
    if (!man) throw DataError("cannot write " + target.string());
    man << out;
}

ConsolidatedSummary consolidate_reports(const std::string& outdir) {
    fs::path dir(outdir);
    if (!fs::exists(dir / "manifest.json"))
        throw DataError("no manifest.json in " + outdir + "; run a command there first");

    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl")
            names.push_back(entry.path().filename().string());
    }
    std::sort(names.begin(), names.end());

    std::vector<SummaryRow> rows;
    for (const auto& name : names) {
        std::ifstream in(dir / name);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            nlohmann::json rec;
            try {
                rec = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error& e) {
                throw DataError(name + ":" + std::to_string(lineno) + ": " + e.what());
            }
            if (!rec.is_object() || !rec.contains("check") || !rec.contains("pass"))
                throw DataError(name + ":" + std::to_string(lineno) +
                                ": not a report record (need check/pass fields)");
            SummaryRow row;
            row.check = rec["check"].get<std::string>();
            row.source = name;
            row.pass = rec["pass"].get<bool>();
            auto get_num = [&](const char* key) {
                return rec.contains(key) && rec[key].is_number() ? rec[key].get<double>() : 0.0;
            };
            row.measured = get_num("measured");
            row.bound = get_num("bound");
            row.tolerance = get_num("tolerance");
            row.runtime_s = get_num("runtime_s");
            if (rec.contains("seed") && rec["seed"].is_number_unsigned())
                row.seed = rec["seed"].get<uint64_t>();
            rows.push_back(std::move(row));
        }
    }

    // Failures first, otherwise stable in (file, line) order.
    std::stable_sort(rows.begin(), rows.end(),
                     [](const SummaryRow& a, const SummaryRow& b) { return a.pass < b.pass; });

    ConsolidatedSummary sum;
    size_t wc = 12, ws = 12;
    for (const auto& r : rows) {
        wc = std::max(wc, r.check.size());
        ws = std::max(ws, r.source.size());
        (r.pass ? sum.n_pass : sum.n_fail)++;
    }

    std::ostringstream text;
    text << pad("status", 8) << pad("check", wc + 2) << pad("source", ws + 2)
         << pad("measured", 14) << pad("bound", 14) << pad("tolerance", 14) << "runtime_s\n";
    sum.table_csv = "status,check,source,measured,bound,tolerance,runtime_s,seed\n";
    for (const auto& r : rows) {
        text << pad(r.pass ? "PASS" : "FAIL", 8) << pad(r.check, wc + 2)
             << pad(r.source, ws + 2) << pad(fmt6(r.measured), 14) << pad(fmt6(r.bound), 14)
             << pad(fmt6(r.tolerance), 14) << fmt6(r.runtime_s) << "\n";
        sum.table_csv += std::string(r.pass ? "PASS" : "FAIL") + "," + r.check + "," + r.source +
                         "," + format_double(r.measured) + "," + format_double(r.bound) + "," +
                         format_double(r.tolerance) + "," + format_double(r.runtime_s) + "," +
                         std::to_string(r.seed) + "\n";
    }
    text << rows.size() << " reports, " << sum.n_pass << " passed, " << sum.n_fail
         << " failed\n";
    sum.table_text = text.str();
    return sum;
}

}  // namespace ergolab
