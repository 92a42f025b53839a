#include "mlpde/analysis.hpp"

#include "mlpde/oracle.hpp"
#include "mlpde/stochastic_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#ifndef MLPDE_BUILD_ID
#define MLPDE_BUILD_ID "unknown"
#endif

namespace mlpde {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double out = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return out;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' has non-numeric value '" + value + "'");
    }
}

long long parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const long long out = std::stoll(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return out;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' has non-integer value '" + value + "'");
    }
}

std::vector<double> parse_vector(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
    if (out.empty()) throw ConfigError("config: key '" + key + "' is empty");
    return out;
}

std::vector<double> resolve_x0(const RunConfig& config) {
    if (config.x0.empty())
        return std::vector<double>(static_cast<std::size_t>(config.d), 0.0);
    if (config.x0.size() == 1 && config.d > 1)
        return std::vector<double>(static_cast<std::size_t>(config.d), config.x0[0]);
    if (static_cast<int>(config.x0.size()) != config.d)
        throw ConfigError("config: x0 has " + std::to_string(config.x0.size()) +
                          " entries but d = " + std::to_string(config.d));
    return config.x0;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

ErrorWeighting ErrorWeighting::for_gap(int d, double gap) {
    if (d < 1) throw std::invalid_argument("ErrorWeighting: d must be >= 1");
    if (!(gap >= 0.0)) throw std::invalid_argument("ErrorWeighting: gap must be >= 0");
    ErrorWeighting w;
    w.weights.assign(static_cast<std::size_t>(d) + 1, std::sqrt(gap));
    w.weights[0] = 1.0;
    return w;
}

ReferenceSpec ReferenceSpec::parse(const std::string& text) {
    ReferenceSpec spec;
    const std::string t = trim(text);
    if (t == "oracle") {
        spec.kind = Kind::kOracle;
        return spec;
    }
    if (t == "exact") {
        spec.kind = Kind::kExact;
        return spec;
    }
    if (t.rfind("mlp(", 0) == 0 && t.back() == ')') {
        const std::string inner = t.substr(4, t.size() - 5);
        const auto comma = inner.find(',');
        if (comma != std::string::npos) {
            spec.kind = Kind::kMlp;
            spec.n_ref = static_cast<int>(parse_int("reference", trim(inner.substr(0, comma))));
            spec.m_ref = static_cast<int>(parse_int("reference", trim(inner.substr(comma + 1))));
            if (spec.n_ref < 1 || spec.m_ref < 1)
                throw ConfigError("config: reference depths must be >= 1");
            return spec;
        }
    }
    throw ConfigError("config: reference must be mlp(n,m), oracle, or exact; got '" + t + "'");
}

std::string ReferenceSpec::to_string() const {
    switch (kind) {
        case Kind::kOracle: return "oracle";
        case Kind::kExact: return "exact";
        case Kind::kMlp: break;
    }
    return "mlp(" + std::to_string(n_ref) + "," + std::to_string(m_ref) + ")";
}

void RunConfig::validate() const {
    if (d < 1) throw ConfigError("config: d must be >= 1");
    if (!(T > 0.0)) throw ConfigError("config: T must be positive");
    if (!(t0 >= 0.0 && t0 < T)) throw ConfigError("config: t0 must satisfy 0 <= t0 < T");
    if (n_max < 1) throw ConfigError("config: nmax must be >= 1");
    if (fixed_base && m_fixed < 1) throw ConfigError("config: m must be >= 1");
    if (repetitions < 1) throw ConfigError("config: reps must be >= 1");
    if (!(p >= 2.0)) throw ConfigError("config: p must be >= 2");
    if (output_path.empty()) throw ConfigError("config: out must be non-empty");
    if (!x0.empty() && x0.size() != 1 && static_cast<int>(x0.size()) != d)
        throw ConfigError("config: x0 must be scalar or have exactly d entries");
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot read '" + path + "'");
    RunConfig config;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(lineno) + " of '" + path +
                              "' is not key = value");
        config.apply_override(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return config;
}

void RunConfig::apply_override(const std::string& key, const std::string& value) {
    if (key == "problem") {
        problem_label = value;
    } else if (key == "d") {
        d = static_cast<int>(parse_int(key, value));
    } else if (key == "T") {
        T = parse_double(key, value);
    } else if (key == "t0") {
        t0 = parse_double(key, value);
    } else if (key == "x0") {
        x0 = parse_vector(key, value);
    } else if (key == "nmax") {
        n_max = static_cast<int>(parse_int(key, value));
    } else if (key == "base") {
        if (value == "schedule") {
            fixed_base = false;
        } else if (value == "fixed") {
            fixed_base = true;
        } else {
            throw ConfigError("config: base must be 'schedule' or 'fixed', got '" + value + "'");
        }
    } else if (key == "m") {
        m_fixed = static_cast<int>(parse_int(key, value));
        fixed_base = true;
    } else if (key == "reference") {
        reference = ReferenceSpec::parse(value);
    } else if (key == "reps") {
        repetitions = static_cast<int>(parse_int(key, value));
    } else if (key == "p") {
        p = parse_double(key, value);
    } else if (key == "seed") {
        seed = static_cast<std::uint64_t>(parse_int(key, value));
    } else if (key == "out") {
        output_path = value;
    } else {
        throw ConfigError("config: unknown key '" + key + "'");
    }
}

std::vector<double> lp_error(const std::vector<EstimateVector>& estimates,
                             const EstimateVector& reference,
                             double p,
                             const ErrorWeighting& weighting) {
    if (estimates.empty()) throw std::invalid_argument("lp_error: no estimates");
    if (!(p >= 1.0)) throw std::invalid_argument("lp_error: p must be >= 1");
    const std::size_t slots = reference.slots.size();
    if (weighting.weights.size() != slots)
        throw std::invalid_argument("lp_error: weighting size mismatch");
    for (const EstimateVector& e : estimates)
        if (e.slots.size() != slots)
            throw std::invalid_argument("lp_error: estimate size mismatch");

    std::vector<double> out(slots, 0.0);
    const double inv_r = 1.0 / static_cast<double>(estimates.size());
    for (std::size_t s = 0; s < slots; ++s) {
        double acc = 0.0;
        for (const EstimateVector& e : estimates)
            acc += std::pow(std::abs(e.slots[s] - reference.slots[s]), p);
        out[s] = weighting.weights[s] * std::pow(acc * inv_r, 1.0 / p);
    }
    return out;
}

double fit_rate(const ExperimentReport& report, RateAxis axis) {
    std::vector<double> lx, ly;
    for (const ReportRow& row : report.rows) {
        const double a = (axis == RateAxis::kRvCount)
                             ? static_cast<double>(row.rv_count)
                             : row.runtime_seconds;
        if (!(row.error > 0.0) || !(a > 0.0)) {
            std::fprintf(stderr, "fit_rate: skipping degenerate row n=%d (error=%g, axis=%g)\n",
                         row.n, row.error, a);
            continue;
        }
        lx.push_back(std::log(a));
        ly.push_back(std::log(row.error));
    }
    if (lx.size() < 3)
        throw std::invalid_argument("fit_rate: fewer than 3 usable rows");

    const double n = static_cast<double>(lx.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ExperimentReport run_experiment(const RunConfig& config) {
    config.validate();

    PdeProblem problem;
    try {
        problem = make_problem(config.problem_label, config.d, config.T);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const BrownianKernel kernel(config.T);
    const std::vector<double> x0 = resolve_x0(config);

    ExperimentReport report;
    report.config = config;
    report.config.x0 = x0;

    const ErrorWeighting weighting = ErrorWeighting::for_gap(config.d, config.T - config.t0);
    switch (config.reference.kind) {
        case ReferenceSpec::Kind::kMlp: {
            const RandomStream root(config.seed);
            RandomStream ref_stream = root.derive_child(0, -1, StreamRole::kReference);
            MlpParams ref_params;
            ref_params.n = config.reference.n_ref;
            ref_params.m = config.reference.m_ref;
            ref_params.t = config.t0;
            ref_params.x = x0;
            report.reference = estimate_blocked(ref_stream, problem, kernel, ref_params);
            break;
        }
        case ReferenceSpec::Kind::kOracle: {
            if (config.d > 2)
                throw ConfigError("config: oracle reference supports d <= 2 only");
            const QuadratureGrid grid;
            report.reference = picard_solve(problem, grid, {{config.t0, x0}}).values.front();
            break;
        }
        case ReferenceSpec::Kind::kExact: {
            if (!problem.exact)
                throw ConfigError("config: problem '" + config.problem_label +
                                  "' has no closed-form solution");
            report.reference = problem.exact(config.t0, x0);
            break;
        }
    }

    for (int n = 1; n <= config.n_max; ++n) {
        const int m = config.fixed_base ? config.m_fixed : m_schedule(n);
        MlpParams params;
        params.n = n;
        params.m = m;
        params.t = config.t0;
        params.x = x0;

        const std::uint64_t row_seed = derive_seed(config.seed, static_cast<std::uint64_t>(n));
        const BatchResult batch = run_batch(row_seed, problem, kernel, params, config.repetitions);

        std::vector<EstimateVector> estimates;
        estimates.reserve(batch.replicates.size());
        for (const ReplicateResult& rep : batch.replicates) {
            if (!rep.ok()) throw EstimationFailure(n, 0, rep.failure);
            estimates.push_back(rep.estimate);
        }

        ReportRow row;
        row.n = n;
        row.m = m;
        double mean = 0.0;
        for (const EstimateVector& e : estimates) {
            mean += e.value();
            row.replicate_values.push_back(e.value());
        }
        row.estimate = mean / static_cast<double>(estimates.size());
        row.slot_errors = lp_error(estimates, report.reference, config.p, weighting);
        row.error = row.slot_errors[0];
        row.sup_error = *std::max_element(row.slot_errors.begin(), row.slot_errors.end());
        row.runtime_seconds = batch.wall_seconds;
        row.rv_count = batch.rv_per_replicate;

        const std::uint64_t expected = rv_count_closed_form(config.d, n, m);
        if (row.rv_count != expected)
            throw std::logic_error("run_experiment: draw count disagrees with the closed form");

        report.rows.push_back(row);
    }
    return report;
}

namespace {

std::string output_stem(const std::string& path) {
    if (path.size() > 4 && path.substr(path.size() - 4) == ".csv")
        return path.substr(0, path.size() - 4);
    return path;
}

void write_plot_block(std::ofstream& out, const ExperimentReport& report, RateAxis axis) {
    out << "# axis: " << (axis == RateAxis::kRvCount ? "rv_count" : "runtime_seconds") << "\n";
    out << "# axis error guide_half guide_quarter\n";
    for (const ReportRow& row : report.rows) {
        const double a = (axis == RateAxis::kRvCount)
                             ? static_cast<double>(row.rv_count)
                             : row.runtime_seconds;
        out << format_double(a) << ' ' << format_double(row.error) << ' '
            << format_double(std::pow(a, -0.5)) << ' ' << format_double(std::pow(a, -0.25))
            << "\n";
    }
}

}  // namespace

void emit_outputs(const ExperimentReport& report, const std::string& output_path) {
    {
        std::ofstream csv(output_path);
        if (!csv) throw IoError("cannot write '" + output_path + "'");
        csv << "n,m,estimate,error,RT,RV\n";
        for (const ReportRow& row : report.rows) {
            csv << row.n << ',' << row.m << ',' << format_double(row.estimate) << ','
                << format_double(row.error) << ',' << format_double(row.runtime_seconds) << ','
                << row.rv_count << "\n";
        }
        if (!csv) throw IoError("write failed for '" + output_path + "'");
    }

    const std::string stem = output_stem(output_path);
    const std::string plot_path = stem + "-plot.txt";
    {
        std::ofstream plot(plot_path);
        if (!plot) throw IoError("cannot write '" + plot_path + "'");
        plot << "# log-log convergence data; guides are axis^(-1/2) and axis^(-1/4)\n";
        write_plot_block(plot, report, RateAxis::kRvCount);
        plot << "\n";
        write_plot_block(plot, report, RateAxis::kRuntime);
        if (!plot) throw IoError("write failed for '" + plot_path + "'");
    }

    const std::string meta_path = stem + "-meta.txt";
    {
        const RunConfig& c = report.config;
        std::ofstream meta(meta_path);
        if (!meta) throw IoError("cannot write '" + meta_path + "'");
        meta << "problem = " << c.problem_label << "\n";
        meta << "d = " << c.d << "\n";
        meta << "T = " << format_double(c.T) << "\n";
        meta << "t0 = " << format_double(c.t0) << "\n";
        meta << "x0 =";
        for (double v : c.x0) meta << ' ' << format_double(v);
        meta << "\n";
        meta << "nmax = " << c.n_max << "\n";
        meta << "base = " << (c.fixed_base ? "fixed" : "schedule") << "\n";
        if (c.fixed_base) meta << "m = " << c.m_fixed << "\n";
        meta << "reference = " << c.reference.to_string() << "\n";
        meta << "reps = " << c.repetitions << "\n";
        meta << "p = " << format_double(c.p) << "\n";
        meta << "seed = " << c.seed << "\n";
        meta << "reference_value = " << format_double(report.reference.value()) << "\n";
        meta << "build = " << MLPDE_BUILD_ID << "\n";
        if (!meta) throw IoError("write failed for '" + meta_path + "'");
    }
}

std::vector<ReportRow> read_report_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty CSV '" + path + "'");
    if (trim(line) != "n,m,estimate,error,RT,RV")
        throw IoError("unexpected CSV header in '" + path + "': " + line);

    std::vector<ReportRow> rows;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 6) throw IoError("malformed CSV row in '" + path + "': " + line);
        ReportRow row;
        try {
            row.n = static_cast<int>(parse_int("n", fields[0]));
            row.m = static_cast<int>(parse_int("m", fields[1]));
            row.estimate = parse_double("estimate", fields[2]);
            row.error = parse_double("error", fields[3]);
            row.runtime_seconds = parse_double("RT", fields[4]);
            row.rv_count = static_cast<std::uint64_t>(parse_int("RV", fields[5]));
        } catch (const ConfigError&) {
            throw IoError("malformed CSV row in '" + path + "': " + line);
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace mlpde
