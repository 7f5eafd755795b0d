#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ergolab/estimators.hpp"
#include "ergolab/hjb.hpp"
#include "ergolab/landscape.hpp"
#include "ergolab/sde.hpp"
#include "ergolab/tunnel.hpp"
#include "ergolab/verify.hpp"

namespace ergolab {

/// Round-trip decimal rendering (%.17g). Every artifact writes doubles
/// through this so a rerun with the same seed is byte-identical.
std::string format_double(double v);

/// FNV-1a 64-bit content hash; manifests print it as 16 hex digits.
uint64_t fnv1a64(const std::string& bytes);

/// JSON number token; non-finite values become null (JSON has no literal).
std::string json_number(double v);

/// JSON array of numbers via json_number.
std::string json_array(const std::vector<double>& v);

// ---- serializers -------------------------------------------------------

/// CSV `time,traj,dim,value`; dim is 0 for the state row and 1 for the
/// applied control row of the same recorded step.
std::string csv_path_batch(const PathBatch& paths);

/// CSV `traj,tau,side,location,censored` (side -1/0/+1, censored 0/1).
std::string csv_exit_samples(const std::vector<ExitSample>& samples);

/// CSV `x,phi,u_star` over the solution grid.
std::string csv_hjb(const HjbSolution& sol);

/// CSV `bin_lo,bin_hi,mass` per state bin.
std::string csv_histogram(const OccupationHistogram& hist);

/// Single-row CSV `rho,se,T,burn_in,batch,excluded`.
std::string csv_estimate(const ErgodicEstimate& est);

/// Two-column CSV with a caller-supplied header line.
std::string csv_xy(const std::string& header, const std::vector<double>& x,
                   const std::vector<double>& y);

/// JSON {"rho_eps", "sweeps", "residual", "converged", "eps", "seed"}.
std::string json_hjb_scalars(const HjbSolution& sol, double eps, uint64_t seed);

/// JSON {"rho", "se", "T", "burn_in", "batch", "excluded", "seed"}.
std::string json_estimate(const ErgodicEstimate& est, uint64_t seed);

/// JSON {"minima", "maxima", "depths", "lambda", "deep_wells"}; depths holds
/// each well's escape barrier, the smaller adjacent saddle height gap.
std::string json_decomposition(const WellDecomposition& wells);

/// JSON {"states", "Q", "mu", "lambda", "p"}.
std::string json_chain(const TunnelChain& chain);

/// One JSON object per line: {"check", "claim", "measured", "bound",
/// "tolerance", "pass", "runtime_s", "seed", "detail"}. Non-finite numbers
/// serialize as null.
std::string jsonl_reports(const std::vector<VerificationReport>& reports);

/// Terminal-readable rendering of the same reports, one block per check.
std::string text_summary(const std::vector<VerificationReport>& reports);

// ---- artifact plumbing --------------------------------------------------

/// Collects the files of one command run and closes with a manifest.json
/// listing every emitted file with its byte count and content hash.
class ArtifactWriter {
  public:
    explicit ArtifactWriter(std::string outdir);

    /// Writes bytes to outdir/name (creating parent directories) and records
    /// the entry. Throws DataError when the file cannot be written.
    void write_text(const std::string& name, const std::string& bytes);

    /// Writes manifest.json:
    /// {"command", "seed", "files": [{"path", "bytes", "fnv1a64"}]}.
    void finalize(const std::string& command, uint64_t seed);

    const std::string& dir() const { return outdir_; }

  private:
    struct Entry {
        std::string path;
        size_t bytes;
        uint64_t hash;
    };
    std::string outdir_;
    std::vector<Entry> entries_;
};

/// Merged view of every JSON-lines report found in an output directory.
struct ConsolidatedSummary {
    int n_pass = 0;
    int n_fail = 0;
    std::string table_text;  // failures first, then passes
    std::string table_csv;   // status,check,source,measured,bound,tolerance,runtime_s,seed
};

/// Requires outdir/manifest.json (DataError when absent), then merges every
/// *.jsonl file in the directory in name order. Malformed report lines are
/// DataErrors naming the file.
ConsolidatedSummary consolidate_reports(const std::string& outdir);

}  // namespace ergolab
