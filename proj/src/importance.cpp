#include "sampleimp/importance.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numeric>
#include <stdexcept>
#include <string>

#include "sampleimp/data.hpp"
#include "sampleimp/text.hpp"

namespace sampleimp {

static_assert(std::endian::native == std::endian::little, "binary dumps assume a little-endian host");

GradientLog::GradientLog(std::size_t n_samples) : n_samples_(n_samples) {
    if (n_samples == 0) throw std::invalid_argument("GradientLog: n_samples must be positive");
}

void GradientLog::record_epoch(std::size_t epoch, std::span<const double> norms_row) {
    if (epoch != epochs_) {
        throw std::invalid_argument("record_epoch: expected epoch " + std::to_string(epochs_) +
                                    ", got " + std::to_string(epoch));
    }
    if (norms_row.size() != n_samples_) {
        throw std::invalid_argument("record_epoch: row has " + std::to_string(norms_row.size()) +
                                    " entries, log has " + std::to_string(n_samples_) + " samples");
    }
    for (std::size_t s = 0; s < norms_row.size(); ++s) {
        if (!std::isfinite(norms_row[s]) || norms_row[s] < 0.0) {
            throw std::invalid_argument("record_epoch: norm of sample " + std::to_string(s) +
                                        " is negative or non-finite");
        }
    }
    norms_.insert(norms_.end(), norms_row.begin(), norms_row.end());
    ++epochs_;
}

double GradientLog::at(std::size_t epoch, std::size_t sample) const {
    if (epoch >= epochs_ || sample >= n_samples_) throw std::out_of_range("GradientLog::at");
    return norms_[epoch * n_samples_ + sample];
}

std::span<const double> GradientLog::row(std::size_t epoch) const {
    if (epoch >= epochs_) throw std::out_of_range("GradientLog::row");
    return std::span<const double>(norms_).subspan(epoch * n_samples_, n_samples_);
}

ImportanceRanking rank_by_score(std::vector<double> scores) {
    ImportanceRanking r;
    r.order.resize(scores.size());
    std::iota(r.order.begin(), r.order.end(), std::size_t{0});
    std::stable_sort(r.order.begin(), r.order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    r.scores = std::move(scores);
    return r;
}

ImportanceRanking importance_scores(const GradientLog& log) {
    const std::size_t E = log.epochs_completed(), N = log.n_samples();
    if (E == 0) throw std::invalid_argument("importance_scores: gradient log is empty");
    std::vector<double> scores(N, 0.0);
    for (std::size_t e = 0; e < E; ++e) {
        const auto row = log.row(e);
        for (std::size_t s = 0; s < N; ++s) scores[s] += row[s];
    }
    for (auto& v : scores) v /= static_cast<double>(E);
    return rank_by_score(std::move(scores));
}

std::size_t selection_size(double p, std::size_t n) {
    if (!(p > 0.0 && p <= 100.0)) {
        throw std::invalid_argument("selection percentage must lie in (0, 100], got " + format_double(p));
    }
    return std::min(n, snapped_ceil(p / 100.0 * static_cast<double>(n)));
}

SelectionResult select_top_p(const ImportanceRanking& ranking, double p) {
    SelectionResult sel;
    sel.p = p;
    sel.k = selection_size(p, ranking.order.size());
    sel.indices.assign(ranking.order.begin(), ranking.order.begin() + static_cast<std::ptrdiff_t>(sel.k));
    std::sort(sel.indices.begin(), sel.indices.end());
    return sel;
}

void write_gradient_log_csv(const std::filesystem::path& path, const GradientLog& log) {
    std::string out = "epoch";
    for (std::size_t s = 0; s < log.n_samples(); ++s) out += "," + std::to_string(s);
    out += '\n';
    for (std::size_t e = 0; e < log.epochs_completed(); ++e) {
        out += std::to_string(e);
        for (double v : log.row(e)) {
            out += ',';
            out += format_double(v);
        }
        out += '\n';
    }
    write_file_atomic(path, out);
}

namespace {

constexpr char kLogMagic[8] = {'S', 'I', 'M', 'P', 'G', 'L', 'O', 'G'};
constexpr std::uint32_t kLogVersion = 1;

template <typename T>
void append_raw(std::string& out, const T& v) {
    out.append(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T take_raw(const std::string& in, std::size_t& pos) {
    if (pos + sizeof(T) > in.size()) throw std::runtime_error("truncated gradient log dump");
    T v;
    std::memcpy(&v, in.data() + pos, sizeof v);
    pos += sizeof v;
    return v;
}

}  // namespace

void write_gradient_log_binary(const std::filesystem::path& path, const GradientLog& log) {
    std::string out(kLogMagic, sizeof kLogMagic);
    append_raw(out, kLogVersion);
    append_raw(out, static_cast<std::uint64_t>(log.epochs_completed()));
    append_raw(out, static_cast<std::uint64_t>(log.n_samples()));
    out.append(reinterpret_cast<const char*>(log.norms().data()), log.norms().size() * sizeof(double));
    write_file_atomic(path, out);
}

GradientLog read_gradient_log_binary(const std::filesystem::path& path) {
    const std::string in = read_file(path);
    if (in.size() < sizeof kLogMagic || std::memcmp(in.data(), kLogMagic, sizeof kLogMagic) != 0) {
        throw std::runtime_error(path.string() + " is not a gradient log dump");
    }
    std::size_t pos = sizeof kLogMagic;
    if (take_raw<std::uint32_t>(in, pos) != kLogVersion) {
        throw std::runtime_error("unsupported gradient log version in " + path.string());
    }
    const auto E = take_raw<std::uint64_t>(in, pos);
    const auto N = take_raw<std::uint64_t>(in, pos);
    GradientLog log(N);
    std::vector<double> row(N);
    for (std::uint64_t e = 0; e < E; ++e) {
        for (auto& v : row) v = take_raw<double>(in, pos);
        log.record_epoch(e, row);
    }
    return log;
}

void write_ranking_csv(const std::filesystem::path& path, const ImportanceRanking& ranking) {
    std::vector<std::size_t> rank(ranking.order.size());
    for (std::size_t r = 0; r < ranking.order.size(); ++r) rank[ranking.order[r]] = r + 1;
    std::string out = "sample_index,score,rank\n";
    for (std::size_t s = 0; s < ranking.scores.size(); ++s) {
        out += std::to_string(s) + "," + format_double(ranking.scores[s]) + "," +
               std::to_string(rank[s]) + "\n";
    }
    write_file_atomic(path, out);
}

}  // namespace sampleimp
