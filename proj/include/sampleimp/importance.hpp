#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace sampleimp {

// E x N matrix of per-sample gradient norms, filled one epoch row at a time.
class GradientLog {
public:
    GradientLog() = default;
    explicit GradientLog(std::size_t n_samples);

    // Appends the row for `epoch`, which must equal epochs_completed(). Every
    // entry must be finite and non-negative. Throws std::invalid_argument.
    void record_epoch(std::size_t epoch, std::span<const double> norms_row);

    std::size_t epochs_completed() const noexcept { return epochs_; }
    std::size_t n_samples() const noexcept { return n_samples_; }

    double at(std::size_t epoch, std::size_t sample) const;
    std::span<const double> row(std::size_t epoch) const;
    // Epoch-major storage, epochs_completed() * n_samples() entries.
    const std::vector<double>& norms() const noexcept { return norms_; }

    friend bool operator==(const GradientLog&, const GradientLog&) = default;

private:
    std::size_t n_samples_ = 0;
    std::size_t epochs_ = 0;
    std::vector<double> norms_;
};

struct ImportanceRanking {
    std::vector<double> scores;
    // Sample indices by descending score; equal scores keep ascending index.
    std::vector<std::size_t> order;
};

// Mean norm of every sample over all recorded epochs.
ImportanceRanking importance_scores(const GradientLog& log);

// Builds the ordering for arbitrary scores (used by importance_scores).
ImportanceRanking rank_by_score(std::vector<double> scores);

struct SelectionResult {
    double p = 100.0;
    std::size_t k = 0;
    std::vector<std::size_t> indices;  // ascending, i.e. temporal order
};

// k = ceil(p/100 * n); 0 < p <= 100 or std::invalid_argument.
std::size_t selection_size(double p, std::size_t n);

// The k highest-scoring samples, which is the maximiser of the summed score
// over all subsets of size at most k.
SelectionResult select_top_p(const ImportanceRanking& ranking, double p);

// Dumps. CSV: header `epoch,0,1,...,N-1`, one line per epoch.
// Binary: "SIMPGLOG", u32 version, u64 E, u64 N, E*N little-endian doubles.
void write_gradient_log_csv(const std::filesystem::path& path, const GradientLog& log);
void write_gradient_log_binary(const std::filesystem::path& path, const GradientLog& log);
GradientLog read_gradient_log_binary(const std::filesystem::path& path);

// `sample_index,score,rank` in sample order; rank 1 is the most important.
void write_ranking_csv(const std::filesystem::path& path, const ImportanceRanking& ranking);

}  // namespace sampleimp
