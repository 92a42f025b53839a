#include "mlpde/mlp_core.hpp"
#include "mlpde/stochastic_kernel.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

double wall_seconds(const std::function<void()>& fn) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    const auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(stop - start).count();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Timing comparison: serial recursion vs blocked parallel estimator"};
    std::string problem_label = "sin_mean";
    int d = 100;
    double T = 1.0;
    int n = 5;
    int m = 3;
    int reps = 3;
    unsigned long long seed = 1;
    app.add_option("--problem", problem_label, "problem label");
    app.add_option("--d", d, "space dimension");
    app.add_option("--T", T, "time horizon");
    app.add_option("--n", n, "estimator depth");
    app.add_option("--m", m, "branching base");
    app.add_option("--reps", reps, "timing repetitions");
    app.add_option("--seed", seed, "stream seed");
    CLI11_PARSE(app, argc, argv);

    try {
        const mlpde::PdeProblem problem = mlpde::make_problem(problem_label, d, T);
        const mlpde::BrownianKernel kernel(T);
        mlpde::MlpParams params;
        params.n = n;
        params.m = m;
        params.x.assign(static_cast<std::size_t>(d), 0.0);

        int threads = 1;
#ifdef _OPENMP
        threads = omp_get_max_threads();
#endif
        std::printf("problem=%s d=%d n=%d m=%d rv=%llu threads=%d\n", problem_label.c_str(), d,
                    n, m,
                    static_cast<unsigned long long>(mlpde::rv_count_closed_form(d, n, m)),
                    threads);

        mlpde::EstimateVector serial, blocked;
        double best_serial = 1e300;
        double best_blocked = 1e300;
        for (int r = 0; r < reps; ++r) {
            best_serial = std::min(best_serial, wall_seconds([&] {
                serial = mlpde::estimate(mlpde::RandomStream(seed), problem, kernel, params);
            }));
            best_blocked = std::min(best_blocked, wall_seconds([&] {
                blocked = mlpde::estimate_blocked(mlpde::RandomStream(seed), problem, kernel, params);
            }));
        }

        double max_diff = 0.0;
        for (std::size_t k = 0; k < serial.slots.size(); ++k)
            max_diff = std::max(max_diff, std::abs(serial.slots[k] - blocked.slots[k]));

        std::printf("serial   %.3f s  (value %.9g)\n", best_serial, serial.value());
        std::printf("blocked  %.3f s  (value %.9g)\n", best_blocked, blocked.value());
        std::printf("speedup  %.2fx   max slot diff %.3g\n", best_serial / best_blocked, max_diff);
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
