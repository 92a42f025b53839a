#include "mlpde/mlp_core.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

namespace mlpde {

namespace {

std::uint64_t add_checked(std::uint64_t a, std::uint64_t b) {
    std::uint64_t out;
    if (__builtin_add_overflow(a, b, &out))
        throw std::overflow_error("rv count overflows 64 bits");
    return out;
}

std::uint64_t mul_checked(std::uint64_t a, std::uint64_t b) {
    std::uint64_t out;
    if (__builtin_mul_overflow(a, b, &out))
        throw std::overflow_error("rv count overflows 64 bits");
    return out;
}

std::int64_t ipow_checked(int base, int exp) {
    std::int64_t out = 1;
    for (int k = 0; k < exp; ++k) {
        if (__builtin_mul_overflow(out, static_cast<std::int64_t>(base), &out))
            throw std::overflow_error("sample count overflows 64 bits");
    }
    return out;
}

void check_inputs(const PdeProblem& problem,
                  const StochasticKernel& kernel,
                  const MlpParams& params) {
    params.validate(kernel.horizon());
    if (static_cast<int>(params.x.size()) != problem.d)
        throw std::invalid_argument("estimate: x dimension does not match the problem");
    if (!problem.g || !problem.f)
        throw std::invalid_argument("estimate: problem is missing g or f");
}

/// Recursion state for one evaluation: per-depth scratch buffers so the
/// inner loops run allocation-free.
class EstimatorRun {
public:
    EstimatorRun(const PdeProblem& problem, const StochasticKernel& kernel, int m, int max_depth)
        : problem_(problem), kernel_(kernel), m_(m),
          frames_(static_cast<std::size_t>(std::max(max_depth, 0)) + 1) {}

    /// Number of top-level summands at depth n (terminal samples plus level
    /// blocks); the base term g(x) is not an item.
    [[nodiscard]] std::int64_t item_count(int n) const {
        std::int64_t total = ipow_checked(m_, n);
        for (int level = 0; level < n; ++level)
            total += ipow_checked(m_, n - level);
        return total;
    }

    /// Adds top-level item j (in terminal-then-levels order) to acc.
    void top_item(const RandomStream& stream,
                  std::int64_t j,
                  int n,
                  double t,
                  std::span<const double> x,
                  double gx,
                  std::span<double> acc) {
        const std::int64_t mn = ipow_checked(m_, n);
        if (j < mn) {
            terminal_item(stream, frame(n), j + 1, mn, t, x, gx, acc);
            return;
        }
        std::int64_t rem = j - mn;
        for (int level = 0; level < n; ++level) {
            const std::int64_t blocks = ipow_checked(m_, n - level);
            if (rem < blocks) {
                block_item(stream, frame(n), level, rem + 1, blocks, t, x, acc);
                return;
            }
            rem -= blocks;
        }
        throw std::out_of_range("top_item: item index beyond the last level block");
    }

private:
    struct Frame {
        std::vector<double> x_point;
        std::vector<double> z;
        std::vector<double> sub;
    };

    Frame& frame(int depth) {
        Frame& fr = frames_[static_cast<std::size_t>(depth)];
        if (fr.z.empty()) {
            const std::size_t d = static_cast<std::size_t>(problem_.d);
            fr.x_point.resize(d);
            fr.z.resize(d + 1);
            fr.sub.resize(d + 1);
        }
        return fr;
    }

    /// Control-variate terminal sample i: (g(X_T) - g(x)) Z / m^n.
    void terminal_item(const RandomStream& stream,
                       Frame& fr,
                       std::int64_t i,
                       std::int64_t mn,
                       double t,
                       std::span<const double> x,
                       double gx,
                       std::span<double> acc) {
        RandomStream child = stream.derive_child(0, -i, StreamRole::kTerminal);
        kernel_.sample_into(child, t, x, kernel_.horizon(), fr.x_point, fr.z);
        const double w = (problem_.g(fr.x_point) - gx) / static_cast<double>(mn);
        if (!std::isfinite(w)) throw EstimationFailure(0, -i, "non-finite terminal weight");
        for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += w * fr.z[k];
    }

    /// Advances `stream` past every draw a depth-`depth` estimate would make
    /// without evaluating anything.  Keeps the counter contract exact for
    /// blocks whose remaining time interval is below double resolution and
    /// therefore contributes nothing.
    void consume_estimate(const RandomStream& stream, int depth, std::span<double> scratch) {
        if (depth <= 0) return;
        const std::int64_t mn = ipow_checked(m_, depth);
        for (std::int64_t i = 1; i <= mn; ++i) {
            RandomStream child = stream.derive_child(0, -i, StreamRole::kTerminal);
            gaussian_increment(child, scratch, 0.0);
        }
        for (int level = 0; level < depth; ++level) {
            const std::int64_t blocks = ipow_checked(m_, depth - level);
            for (std::int64_t i = 1; i <= blocks; ++i)
                consume_block(stream, level, i, scratch);
        }
    }

    void consume_block(const RandomStream& stream,
                       int level,
                       std::int64_t i,
                       std::span<double> scratch) {
        RandomStream own = stream.derive_child(level, i, StreamRole::kLevelBlock);
        sample_arcsine(own);
        gaussian_increment(own, scratch, 0.0);
        RandomStream sub = stream.derive_child(level, i, StreamRole::kSubEstimator);
        consume_estimate(sub, level, scratch);
        if (level >= 1) {
            RandomStream prev = stream.derive_child(level, -i, StreamRole::kSubEstimator);
            consume_estimate(prev, level - 1, scratch);
        }
    }

    /// Level block i at level `level`: the telescoped nonlinearity difference
    /// weighted by Z / (m^{n-level} rho).  Both nonlinearity evaluations use
    /// the block's own (s, X, Z) draw; the two sub-estimates run on
    /// independent child streams.
    void block_item(const RandomStream& stream,
                    Frame& fr,
                    int level,
                    std::int64_t i,
                    std::int64_t blocks,
                    double t,
                    std::span<const double> x,
                    std::span<double> acc) {
        if (!(std::nextafter(t, kernel_.horizon()) < kernel_.horizon())) {
            // No representable time is strictly between t and the horizon, so
            // the weighted integrand carries measure below resolution; burn
            // the block's draws and add nothing.
            consume_block(stream, level, i, fr.x_point);
            return;
        }
        RandomStream own = stream.derive_child(level, i, StreamRole::kLevelBlock);
        const double s = kernel_.sample_time(own, t);
        kernel_.sample_into(own, t, x, s, fr.x_point, fr.z);

        RandomStream sub = stream.derive_child(level, i, StreamRole::kSubEstimator);
        evaluate(sub, level, s, fr.x_point, fr.sub);
        double fval = problem_.f(s, fr.x_point, fr.sub);
        if (level >= 1) {
            RandomStream prev = stream.derive_child(level, -i, StreamRole::kSubEstimator);
            evaluate(prev, level - 1, s, fr.x_point, fr.sub);
            fval -= problem_.f(s, fr.x_point, fr.sub);
        }

        const double w = fval / (static_cast<double>(blocks) * kernel_.rho(t, s));
        if (!std::isfinite(w)) throw EstimationFailure(level, i, "non-finite level-block weight");
        for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += w * fr.z[k];
    }

    /// Full estimate at depth `depth` written into out (size d + 1).
    void evaluate(const RandomStream& stream,
                  int depth,
                  double t,
                  std::span<const double> x,
                  std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        if (depth <= 0) return;

        const double gx = problem_.g(x);
        if (!std::isfinite(gx)) throw EstimationFailure(depth, 0, "non-finite terminal condition");

        Frame& fr = frame(depth);
        const std::int64_t mn = ipow_checked(m_, depth);
        for (std::int64_t i = 1; i <= mn; ++i)
            terminal_item(stream, fr, i, mn, t, x, gx, out);
        for (int level = 0; level < depth; ++level) {
            const std::int64_t blocks = ipow_checked(m_, depth - level);
            for (std::int64_t i = 1; i <= blocks; ++i)
                block_item(stream, fr, level, i, blocks, t, x, out);
        }
        out[0] += gx;
    }

    const PdeProblem& problem_;
    const StochasticKernel& kernel_;
    int m_;
    std::vector<Frame> frames_;
};

}  // namespace

void MlpParams::validate(double horizon) const {
    if (n < 0) throw std::invalid_argument("MlpParams: depth n must be >= 0");
    if (m < 1) throw std::invalid_argument("MlpParams: base m must be >= 1");
    if (x.empty()) throw std::invalid_argument("MlpParams: x must be non-empty");
    if (!(t >= 0.0 && t < horizon))
        throw std::invalid_argument("MlpParams: t must satisfy 0 <= t < horizon");
}

EstimationFailure::EstimationFailure(std::int32_t level, std::int64_t branch, const std::string& what)
    : std::runtime_error("estimation failure at level " + std::to_string(level) +
                         ", branch " + std::to_string(branch) + ": " + what),
      level_(level),
      branch_(branch) {}

EstimateVector estimate(RandomStream stream,
                        const PdeProblem& problem,
                        const StochasticKernel& kernel,
                        const MlpParams& params) {
    check_inputs(problem, kernel, params);
    EstimateVector out(problem.d);
    if (params.n <= 0) return out;

    const double gx = problem.g(params.x);
    if (!std::isfinite(gx)) throw EstimationFailure(params.n, 0, "non-finite terminal condition");

    EstimatorRun run(problem, kernel, params.m, params.n);
    const std::int64_t items = run.item_count(params.n);
    for (std::int64_t j = 0; j < items; ++j)
        run.top_item(stream, j, params.n, params.t, params.x, gx, out.slots);

    out.slots[0] += gx;
    for (double v : out.slots)
        if (!std::isfinite(v)) throw EstimationFailure(params.n, 0, "non-finite accumulated estimate");
    return out;
}

EstimateVector estimate_blocked(RandomStream stream,
                                const PdeProblem& problem,
                                const StochasticKernel& kernel,
                                const MlpParams& params,
                                int chunk_count) {
    check_inputs(problem, kernel, params);
    EstimateVector out(problem.d);
    if (params.n <= 0) return out;

    const double gx = problem.g(params.x);
    if (!std::isfinite(gx)) throw EstimationFailure(params.n, 0, "non-finite terminal condition");

    constexpr int kDefaultChunks = 64;
    EstimatorRun probe(problem, kernel, params.m, params.n);
    const std::int64_t items = probe.item_count(params.n);
    const int chunks = static_cast<int>(std::min<std::int64_t>(
        items, chunk_count > 0 ? chunk_count : kDefaultChunks));

    std::vector<std::vector<double>> partial(
        static_cast<std::size_t>(chunks),
        std::vector<double>(static_cast<std::size_t>(problem.d) + 1, 0.0));
    std::vector<RvCounter> counters(static_cast<std::size_t>(chunks));
    std::vector<std::string> failures(static_cast<std::size_t>(chunks));

#pragma omp parallel for schedule(dynamic)
    for (int c = 0; c < chunks; ++c) {
        try {
            EstimatorRun run(problem, kernel, params.m, params.n);
            RandomStream local = stream;
            local.attach_counter(&counters[static_cast<std::size_t>(c)]);
            const std::int64_t lo = items * c / chunks;
            const std::int64_t hi = items * (c + 1) / chunks;
            for (std::int64_t j = lo; j < hi; ++j)
                run.top_item(local, j, params.n, params.t, params.x, gx,
                             partial[static_cast<std::size_t>(c)]);
        } catch (const std::exception& e) {
            failures[static_cast<std::size_t>(c)] = e.what();
        }
    }

    for (const std::string& msg : failures)
        if (!msg.empty()) throw EstimationFailure(params.n, 0, msg);

    out.slots[0] = gx;
    for (int c = 0; c < chunks; ++c)
        for (std::size_t k = 0; k < out.slots.size(); ++k)
            out.slots[k] += partial[static_cast<std::size_t>(c)][k];
    if (RvCounter* ctr = stream.counter())
        for (const RvCounter& c : counters) ctr->merge(c);

    for (double v : out.slots)
        if (!std::isfinite(v)) throw EstimationFailure(params.n, 0, "non-finite accumulated estimate");
    return out;
}

int m_schedule(int n) {
    if (n <= 0) throw std::invalid_argument("m_schedule: depth must be >= 1");
    return static_cast<int>(std::floor(std::exp(std::sqrt(std::log(static_cast<double>(n))))));
}

std::uint64_t rv_count_closed_form(int d, int n, int m) {
    if (d < 1) throw std::invalid_argument("rv_count_closed_form: d must be >= 1");
    if (m < 1) throw std::invalid_argument("rv_count_closed_form: m must be >= 1");
    if (n <= 0) return 0;

    const std::uint64_t ud = static_cast<std::uint64_t>(d);
    const std::uint64_t um = static_cast<std::uint64_t>(m);
    std::vector<std::uint64_t> rv(static_cast<std::size_t>(n) + 1, 0);
    for (int k = 1; k <= n; ++k) {
        std::uint64_t pow = 1;
        for (int j = 0; j < k; ++j) pow = mul_checked(pow, um);
        std::uint64_t total = mul_checked(ud, pow);
        std::uint64_t weight = pow;
        for (int level = 0; level < k; ++level) {
            std::uint64_t inner = add_checked(1 + ud, rv[static_cast<std::size_t>(level)]);
            if (level >= 1) inner = add_checked(inner, rv[static_cast<std::size_t>(level) - 1]);
            total = add_checked(total, mul_checked(weight, inner));
            weight /= um;
        }
        rv[static_cast<std::size_t>(k)] = total;
    }
    return rv[static_cast<std::size_t>(n)];
}

RvBound rv_bound(int d, int n, int m) {
    if (d < 1 || n < 1 || m < 1)
        throw std::invalid_argument("rv_bound: requires d, n, m >= 1");
    RvBound out;
    std::uint64_t value = 2 * static_cast<std::uint64_t>(d);
    const std::uint64_t factor = 3 * static_cast<std::uint64_t>(m);
    for (int k = 0; k < n; ++k) {
        if (__builtin_mul_overflow(value, factor, &value)) {
            out.value = std::numeric_limits<std::uint64_t>::max();
            out.saturated = true;
            return out;
        }
    }
    out.value = value;
    return out;
}

BatchResult run_batch(std::uint64_t root_seed,
                      const PdeProblem& problem,
                      const StochasticKernel& kernel,
                      const MlpParams& params,
                      int repetitions) {
    if (repetitions < 1) throw std::invalid_argument("run_batch: repetitions must be >= 1");
    check_inputs(problem, kernel, params);

    BatchResult out;
    out.replicates.resize(static_cast<std::size_t>(repetitions));
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(repetitions), 0);
    const RandomStream root(root_seed);

    const auto start = std::chrono::steady_clock::now();
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < repetitions; ++r) {
        RvCounter ctr;
        RandomStream stream = root.derive_child(0, r, StreamRole::kReplicate);
        stream.attach_counter(&ctr);
        try {
            out.replicates[static_cast<std::size_t>(r)].estimate =
                estimate(stream, problem, kernel, params);
        } catch (const std::exception& e) {
            out.replicates[static_cast<std::size_t>(r)].failure = e.what();
        }
        counts[static_cast<std::size_t>(r)] = ctr.count;
    }
    const auto stop = std::chrono::steady_clock::now();
    out.wall_seconds = std::chrono::duration<double>(stop - start).count();

    bool have = false;
    for (int r = 0; r < repetitions; ++r) {
        if (!out.replicates[static_cast<std::size_t>(r)].ok()) continue;
        const std::uint64_t c = counts[static_cast<std::size_t>(r)];
        if (!have) {
            out.rv_per_replicate = c;
            have = true;
        } else if (c != out.rv_per_replicate) {
            throw std::logic_error("run_batch: replicate draw counts diverged");
        }
    }
    return out;
}

}  // namespace mlpde
