#include "mlpde/oracle.hpp"

#include "mlpde/quadrature.hpp"
#include "mlpde/stochastic_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <string>

namespace mlpde {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSqrt2 = std::numbers::sqrt2;

void check_grid(const QuadratureGrid& g) {
    if (g.hermite_order < 4 || g.time_order < 4)
        throw std::invalid_argument("picard_solve: quadrature orders must be >= 4");
    if (g.picard_levels < 1)
        throw std::invalid_argument("picard_solve: picard_levels must be >= 1");
    if (g.space_points < 4 || g.time_slices < 4)
        throw std::invalid_argument("picard_solve: grid needs >= 4 points per axis");
    if (!(g.box_sigmas > 0.0))
        throw std::invalid_argument("picard_solve: box_sigmas must be positive");
}

/// Out = A . In for row-major n x n matrices.
void left_apply(const double* a, const double* in, double* out, int n) {
    for (int i = 0; i < n; ++i) {
        const double* arow = a + static_cast<std::size_t>(i) * n;
        double* orow = out + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) orow[j] = 0.0;
        for (int k = 0; k < n; ++k) {
            const double aik = arow[k];
            const double* irow = in + static_cast<std::size_t>(k) * n;
            for (int j = 0; j < n; ++j) orow[j] += aik * irow[j];
        }
    }
}

/// Out = In . B^T for row-major n x n matrices.
void right_apply(const double* in, const double* b, double* out, int n) {
    for (int i = 0; i < n; ++i) {
        const double* irow = in + static_cast<std::size_t>(i) * n;
        double* orow = out + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const double* brow = b + static_cast<std::size_t>(j) * n;
            double acc = 0.0;
            for (int k = 0; k < n; ++k) acc += irow[k] * brow[k];
            orow[j] = acc;
        }
    }
}

class PicardWorkspace {
public:
    PicardWorkspace(const PdeProblem& problem,
                    const QuadratureGrid& grid,
                    const std::vector<EvalPoint>& eval_points)
        : problem_(problem), grid_(grid), d_(problem.d), slots_(problem.d + 1) {
        if (d_ < 1 || d_ > 2)
            throw std::invalid_argument("picard_solve: supports d = 1 and d = 2 only");
        if (!problem_.g || !problem_.f)
            throw std::invalid_argument("picard_solve: problem is missing g or f");
        check_grid(grid_);

        const double T = problem_.T;
        t_lo_ = 0.0;
        for (const EvalPoint& p : eval_points) {
            if (!(p.first >= 0.0 && p.first < T))
                throw std::invalid_argument("picard_solve: evaluation time outside [0, horizon)");
            if (static_cast<int>(p.second.size()) != d_)
                throw std::invalid_argument("picard_solve: evaluation point dimension mismatch");
        }
        if (!eval_points.empty()) {
            t_lo_ = T;
            for (const EvalPoint& p : eval_points) t_lo_ = std::min(t_lo_, p.first);
        }

        const double spread = grid_.box_sigmas * std::sqrt(T - t_lo_);
        box_lo_.assign(static_cast<std::size_t>(d_), -spread);
        box_hi_.assign(static_cast<std::size_t>(d_), spread);
        for (const EvalPoint& p : eval_points) {
            for (int k = 0; k < d_; ++k) {
                box_lo_[static_cast<std::size_t>(k)] =
                    std::min(box_lo_[static_cast<std::size_t>(k)], p.second[static_cast<std::size_t>(k)] - spread);
                box_hi_[static_cast<std::size_t>(k)] =
                    std::max(box_hi_[static_cast<std::size_t>(k)], p.second[static_cast<std::size_t>(k)] + spread);
            }
        }

        nc_ = grid_.space_points;
        nt_ = grid_.time_slices;
        grid_size_ = (d_ == 1) ? nc_ : nc_ * nc_;

        tau_ = chebyshev_gauss_points(nt_, t_lo_, T);
        tau_w_ = chebyshev_gauss_weights(nt_);
        for (int k = 0; k < d_; ++k)
            xs_.push_back(chebyshev_lobatto_points(nc_, box_lo_[static_cast<std::size_t>(k)],
                                                   box_hi_[static_cast<std::size_t>(k)]));
        xs_w_ = chebyshev_lobatto_weights(nc_);

        coords_.resize(static_cast<std::size_t>(grid_size_) * d_);
        for (int j = 0; j < grid_size_; ++j) {
            if (d_ == 1) {
                coords_[static_cast<std::size_t>(j)] = xs_[0][static_cast<std::size_t>(j)];
            } else {
                coords_[static_cast<std::size_t>(j) * 2] = xs_[0][static_cast<std::size_t>(j / nc_)];
                coords_[static_cast<std::size_t>(j) * 2 + 1] = xs_[1][static_cast<std::size_t>(j % nc_)];
            }
        }

        hermite_ = gauss_hermite(grid_.hermite_order);
        legendre_ = gauss_legendre_01(grid_.time_order);

        build_time_nodes();
        build_terminal();
        build_blur();
    }

    OracleResult run(const std::vector<EvalPoint>& eval_points) {
        const std::size_t tensor = static_cast<std::size_t>(nt_) * grid_size_ * slots_;
        std::vector<double> cur(tensor, 0.0);
        std::vector<double> next(tensor, 0.0);

        OracleResult result;
        for (int iter = 0; iter < grid_.picard_levels; ++iter) {
            apply_map(cur, next);
            double diff = 0.0;
            for (std::size_t i = 0; i < tensor; ++i)
                diff = std::max(diff, std::abs(next[i] - cur[i]));
            result.update_norms.push_back(diff);
            cur.swap(next);
        }

        if (grid_.tol > 0.0 && result.update_norms.back() > grid_.tol) {
            char msg[160];
            std::snprintf(msg, sizeof msg,
                          "picard_solve: final update %.3e exceeds tolerance %.3e; "
                          "raise picard_levels or the quadrature orders",
                          result.update_norms.back(), grid_.tol);
            throw OracleConvergenceError(msg);
        }

        for (const EvalPoint& p : eval_points) result.values.push_back(evaluate(cur, p));
        return result;
    }

private:
    // ==== precomputation =================================================

    void build_time_nodes() {
        const double T = problem_.T;
        const int qs = grid_.time_order;
        r_.resize(static_cast<std::size_t>(nt_) * qs);
        jac_.resize(static_cast<std::size_t>(nt_) * qs);
        sigma_.resize(static_cast<std::size_t>(nt_) * qs);
        tcoef_.resize(static_cast<std::size_t>(nt_) * qs * nt_);
        for (int a = 0; a < nt_; ++a) {
            const double t = tau_[static_cast<std::size_t>(a)];
            const double gap = T - t;
            for (int q = 0; q < qs; ++q) {
                const std::size_t idx = static_cast<std::size_t>(a) * qs + q;
                const double v = legendre_.nodes[static_cast<std::size_t>(q)];
                const double sv = std::sin(0.5 * kPi * v);
                const double r = t + gap * sv * sv;
                r_[idx] = r;
                jac_[idx] = gap * 0.5 * kPi * std::sin(kPi * v) *
                            legendre_.weights[static_cast<std::size_t>(q)];
                sigma_[idx] = std::sqrt(r - t);
                barycentric_coeffs(tau_, tau_w_, r,
                                   std::span<double>(tcoef_.data() + idx * nt_, static_cast<std::size_t>(nt_)));
            }
        }
    }

    void build_terminal() {
        const double T = problem_.T;
        const int qx = grid_.hermite_order;
        const double norm = (d_ == 1) ? 1.0 / std::sqrt(kPi) : 1.0 / kPi;
        terminal_.assign(static_cast<std::size_t>(nt_) * grid_size_ * slots_, 0.0);

        std::vector<double> y(static_cast<std::size_t>(d_));
        for (int a = 0; a < nt_; ++a) {
            const double sigma = std::sqrt(T - tau_[static_cast<std::size_t>(a)]);
            for (int j = 0; j < grid_size_; ++j) {
                double* out = terminal_.data() +
                              (static_cast<std::size_t>(a) * grid_size_ + j) * slots_;
                const double* xj = coords_.data() + static_cast<std::size_t>(j) * d_;
                if (d_ == 1) {
                    for (int q = 0; q < qx; ++q) {
                        const double xi = hermite_.nodes[static_cast<std::size_t>(q)];
                        y[0] = xj[0] + sigma * kSqrt2 * xi;
                        const double gv = problem_.g(y) * hermite_.weights[static_cast<std::size_t>(q)] * norm;
                        out[0] += gv;
                        out[1] += gv * kSqrt2 * xi / sigma;
                    }
                } else {
                    for (int q0 = 0; q0 < qx; ++q0) {
                        const double xi0 = hermite_.nodes[static_cast<std::size_t>(q0)];
                        y[0] = xj[0] + sigma * kSqrt2 * xi0;
                        const double w0 = hermite_.weights[static_cast<std::size_t>(q0)];
                        for (int q1 = 0; q1 < qx; ++q1) {
                            const double xi1 = hermite_.nodes[static_cast<std::size_t>(q1)];
                            y[1] = xj[1] + sigma * kSqrt2 * xi1;
                            const double gv = problem_.g(y) * w0 *
                                              hermite_.weights[static_cast<std::size_t>(q1)] * norm;
                            out[0] += gv;
                            out[1] += gv * kSqrt2 * xi0 / sigma;
                            out[2] += gv * kSqrt2 * xi1 / sigma;
                        }
                    }
                }
            }
        }
    }

    void build_blur() {
        const int qx = grid_.hermite_order;
        const int qs = grid_.time_order;
        const std::size_t mat = static_cast<std::size_t>(nc_) * nc_;
        const std::size_t pairs = static_cast<std::size_t>(nt_) * qs;
        blur_plain_.assign(pairs * d_ * mat, 0.0);
        blur_grad_.assign(pairs * d_ * mat, 0.0);

        const double norm = 1.0 / std::sqrt(kPi);
        std::vector<double> coeff(static_cast<std::size_t>(nc_));
        for (std::size_t idx = 0; idx < pairs; ++idx) {
            const double sigma = sigma_[idx];
            for (int dim = 0; dim < d_; ++dim) {
                double* bp = blur_plain_.data() + (idx * d_ + dim) * mat;
                double* bw = blur_grad_.data() + (idx * d_ + dim) * mat;
                const std::vector<double>& nodes = xs_[static_cast<std::size_t>(dim)];
                const double lo = nodes.front();
                const double hi = nodes.back();
                for (int j = 0; j < nc_; ++j) {
                    const double xj = nodes[static_cast<std::size_t>(j)];
                    for (int q = 0; q < qx; ++q) {
                        const double xi = hermite_.nodes[static_cast<std::size_t>(q)];
                        const double y = std::clamp(xj + sigma * kSqrt2 * xi, lo, hi);
                        barycentric_coeffs(nodes, xs_w_, y, coeff);
                        const double wq = hermite_.weights[static_cast<std::size_t>(q)] * norm;
                        const double gq = wq * kSqrt2 * xi / sigma;
                        double* bprow = bp + static_cast<std::size_t>(j) * nc_;
                        double* bwrow = bw + static_cast<std::size_t>(j) * nc_;
                        for (int k = 0; k < nc_; ++k) {
                            bprow[k] += wq * coeff[static_cast<std::size_t>(k)];
                            bwrow[k] += gq * coeff[static_cast<std::size_t>(k)];
                        }
                    }
                }
            }
        }
    }

    // ==== fixed-point map ================================================

    void apply_map(const std::vector<double>& cur, std::vector<double>& next) {
        const int qs = grid_.time_order;
        const std::size_t slice = static_cast<std::size_t>(grid_size_) * slots_;

#pragma omp parallel for schedule(dynamic)
        for (int a = 0; a < nt_; ++a) {
            std::vector<double> ur(slice);
            std::vector<double> phi(static_cast<std::size_t>(grid_size_));
            std::vector<double> scratch1(static_cast<std::size_t>(grid_size_));
            std::vector<double> scratch2(static_cast<std::size_t>(grid_size_));

            double* out = next.data() + static_cast<std::size_t>(a) * slice;
            const double* term = terminal_.data() + static_cast<std::size_t>(a) * slice;
            std::copy(term, term + slice, out);

            for (int q = 0; q < qs; ++q) {
                const std::size_t idx = static_cast<std::size_t>(a) * qs + q;
                const double* tc = tcoef_.data() + idx * nt_;

                std::fill(ur.begin(), ur.end(), 0.0);
                for (int b = 0; b < nt_; ++b) {
                    const double cb = tc[b];
                    if (cb == 0.0) continue;
                    const double* ub = cur.data() + static_cast<std::size_t>(b) * slice;
                    for (std::size_t i = 0; i < slice; ++i) ur[i] += cb * ub[i];
                }

                const double r = r_[idx];
                for (int j = 0; j < grid_size_; ++j) {
                    phi[static_cast<std::size_t>(j)] = problem_.f(
                        r,
                        std::span<const double>(coords_.data() + static_cast<std::size_t>(j) * d_,
                                                static_cast<std::size_t>(d_)),
                        std::span<const double>(ur.data() + static_cast<std::size_t>(j) * slots_,
                                                static_cast<std::size_t>(slots_)));
                }

                const double jac = jac_[idx];
                const std::size_t mat = static_cast<std::size_t>(nc_) * nc_;
                if (d_ == 1) {
                    const double* bp = blur_plain_.data() + idx * mat;
                    const double* bw = blur_grad_.data() + idx * mat;
                    for (int j = 0; j < nc_; ++j) {
                        const double* bprow = bp + static_cast<std::size_t>(j) * nc_;
                        const double* bwrow = bw + static_cast<std::size_t>(j) * nc_;
                        double v = 0.0;
                        double g1 = 0.0;
                        for (int k = 0; k < nc_; ++k) {
                            v += bprow[k] * phi[static_cast<std::size_t>(k)];
                            g1 += bwrow[k] * phi[static_cast<std::size_t>(k)];
                        }
                        double* oj = out + static_cast<std::size_t>(j) * slots_;
                        oj[0] += jac * v;
                        oj[1] += jac * g1;
                    }
                } else {
                    const double* bp0 = blur_plain_.data() + (idx * 2 + 0) * mat;
                    const double* bp1 = blur_plain_.data() + (idx * 2 + 1) * mat;
                    const double* bw0 = blur_grad_.data() + (idx * 2 + 0) * mat;
                    const double* bw1 = blur_grad_.data() + (idx * 2 + 1) * mat;

                    right_apply(phi.data(), bp1, scratch1.data(), nc_);
                    left_apply(bp0, scratch1.data(), scratch2.data(), nc_);
                    for (int j = 0; j < grid_size_; ++j)
                        out[static_cast<std::size_t>(j) * slots_] += jac * scratch2[static_cast<std::size_t>(j)];
                    left_apply(bw0, scratch1.data(), scratch2.data(), nc_);
                    for (int j = 0; j < grid_size_; ++j)
                        out[static_cast<std::size_t>(j) * slots_ + 1] += jac * scratch2[static_cast<std::size_t>(j)];

                    right_apply(phi.data(), bw1, scratch1.data(), nc_);
                    left_apply(bp0, scratch1.data(), scratch2.data(), nc_);
                    for (int j = 0; j < grid_size_; ++j)
                        out[static_cast<std::size_t>(j) * slots_ + 2] += jac * scratch2[static_cast<std::size_t>(j)];
                }
            }
        }
    }

    // ==== evaluation =====================================================

    EstimateVector evaluate(const std::vector<double>& field, const EvalPoint& p) const {
        const std::size_t slice = static_cast<std::size_t>(grid_size_) * slots_;
        std::vector<double> tc(static_cast<std::size_t>(nt_));
        barycentric_coeffs(tau_, tau_w_, p.first, tc);

        std::vector<double> cx(static_cast<std::size_t>(nc_));
        std::vector<double> cy;
        barycentric_coeffs(xs_[0], xs_w_, p.second[0], cx);
        if (d_ == 2) {
            cy.resize(static_cast<std::size_t>(nc_));
            barycentric_coeffs(xs_[1], xs_w_, p.second[1], cy);
        }

        EstimateVector out(d_);
        for (int b = 0; b < nt_; ++b) {
            const double cb = tc[static_cast<std::size_t>(b)];
            if (cb == 0.0) continue;
            const double* ub = field.data() + static_cast<std::size_t>(b) * slice;
            for (int s = 0; s < slots_; ++s) {
                double acc = 0.0;
                if (d_ == 1) {
                    for (int j = 0; j < nc_; ++j)
                        acc += cx[static_cast<std::size_t>(j)] * ub[static_cast<std::size_t>(j) * slots_ + s];
                } else {
                    for (int j0 = 0; j0 < nc_; ++j0) {
                        const double c0 = cx[static_cast<std::size_t>(j0)];
                        if (c0 == 0.0) continue;
                        double inner = 0.0;
                        for (int j1 = 0; j1 < nc_; ++j1)
                            inner += cy[static_cast<std::size_t>(j1)] *
                                     ub[(static_cast<std::size_t>(j0) * nc_ + j1) * slots_ + s];
                        acc += c0 * inner;
                    }
                }
                out.slots[static_cast<std::size_t>(s)] += cb * acc;
            }
        }
        return out;
    }

    const PdeProblem& problem_;
    QuadratureGrid grid_;
    int d_;
    int slots_;
    double t_lo_ = 0.0;
    int nc_ = 0;
    int nt_ = 0;
    int grid_size_ = 0;
    std::vector<double> box_lo_, box_hi_;
    std::vector<double> tau_, tau_w_;
    std::vector<std::vector<double>> xs_;
    std::vector<double> xs_w_;
    std::vector<double> coords_;
    Quadrature hermite_, legendre_;
    std::vector<double> r_, jac_, sigma_, tcoef_;
    std::vector<double> terminal_;
    std::vector<double> blur_plain_, blur_grad_;
};

}  // namespace

OracleResult picard_solve(const PdeProblem& problem,
                          const QuadratureGrid& grid,
                          const std::vector<EvalPoint>& eval_points) {
    PicardWorkspace ws(problem, grid, eval_points);
    return ws.run(eval_points);
}

namespace {

void nested_eval(RandomStream stream,
                 const PdeProblem& problem,
                 const BrownianKernel& kernel,
                 double t,
                 std::span<const double> x,
                 int depth,
                 int samples,
                 std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    if (depth <= 0) return;

    const std::size_t d = static_cast<std::size_t>(problem.d);
    std::vector<double> xp(d);
    std::vector<double> z(d + 1);
    std::vector<double> sub(d + 1);
    const double inv_n = 1.0 / static_cast<double>(samples);

    for (std::int64_t i = 1; i <= samples; ++i) {
        RandomStream child = stream.derive_child(0, -i, StreamRole::kTerminal);
        kernel.sample_into(child, t, x, kernel.horizon(), xp, z);
        const double w = problem.g(xp) * inv_n;
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += w * z[k];
    }
    for (std::int64_t i = 1; i <= samples; ++i) {
        RandomStream own = stream.derive_child(1, i, StreamRole::kLevelBlock);
        const double s = kernel.sample_time(own, t);
        kernel.sample_into(own, t, x, s, xp, z);
        RandomStream rec = stream.derive_child(1, i, StreamRole::kSubEstimator);
        nested_eval(rec, problem, kernel, s, xp, depth - 1, samples, sub);
        const double w = problem.f(s, xp, sub) * inv_n / kernel.rho(t, s);
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += w * z[k];
    }
}

}  // namespace

EstimateVector nested_mc_reference(RandomStream stream,
                                   const PdeProblem& problem,
                                   double t,
                                   std::span<const double> x,
                                   int depth,
                                   int samples) {
    if (depth < 0 || depth > 3)
        throw std::invalid_argument("nested_mc_reference: depth must be in [0, 3]");
    if (samples < 1)
        throw std::invalid_argument("nested_mc_reference: samples must be >= 1");
    if (static_cast<int>(x.size()) != problem.d)
        throw std::invalid_argument("nested_mc_reference: x dimension mismatch");
    const BrownianKernel kernel(problem.T);
    if (!(t >= 0.0 && t < problem.T))
        throw std::invalid_argument("nested_mc_reference: t outside [0, horizon)");

    EstimateVector out(problem.d);
    nested_eval(stream, problem, kernel, t, x, depth, samples, out.slots);
    return out;
}

}  // namespace mlpde
