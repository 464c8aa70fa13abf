#include "slt/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "slt/dataset_io.hpp"
#include "slt/errors.hpp"
#include "slt/parallel.hpp"

namespace slt {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_fixed(double v, int digits) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    out += '"';
    return out;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    out << text;
    out.flush();
    if (!out) throw io_error("write failed: " + path);
}

RlctResult sweep_eval(const SweepSpec& spec, Family model, int axis_value) {
    ModelDims d = spec.base;
    if (spec.axis == Axis::Concepts) {
        d.n_concepts = axis_value;
    } else {
        d.hidden = axis_value;
    }

    if (spec.composed) {
        ComposedDims c = *spec.composed;
        if (spec.axis == Axis::Concepts) {
            // axis value is the total concept count; the real block is fixed
            c.k_cat = axis_value - c.k_real;
        }
        switch (model) {
            case Family::CBM:
                return rlct_cbm_composed(c);
            case Family::Multitask:
                return rlct_multitask_composed(c, d.hidden, d.true_rank);
            default:
                throw std::invalid_argument("composed outputs are not defined for standard");
        }
    }

    ResponseKinds kinds = spec.kinds.value_or(ResponseKinds{});
    switch (model) {
        case Family::CBM:
            return spec.kinds ? rlct_cbm_typed(d, kinds) : rlct_cbm(d);
        case Family::Multitask:
            return spec.kinds ? rlct_multitask_typed(d, kinds) : rlct_multitask(d);
        default:
            require(d.n_concepts == 0, "standard model has no concept outputs");
            return spec.kinds ? rlct_multitask_typed(d, kinds) : rlct_multitask(d);
    }
}

std::vector<double> finite_values(const std::vector<double>& v) {
    std::vector<double> out;
    out.reserve(v.size());
    for (double x : v) {
        if (std::isfinite(x)) out.push_back(x);
    }
    return out;
}

constexpr std::uint64_t kTruthStream = 0x545255544800ULL;

}  // namespace

std::string axis_name(Axis a) { return a == Axis::Concepts ? "concepts" : "hidden"; }

std::string estimator_name(CurveEstimator e) {
    switch (e) {
        case CurveEstimator::GenError: return "gen_error";
        case CurveEstimator::Wbic: return "wbic";
        default: return "two_temp";
    }
}

std::optional<CurveEstimator> estimator_from_name(const std::string& name) {
    if (name == "gen_error" || name == "curve") return CurveEstimator::GenError;
    if (name == "wbic") return CurveEstimator::Wbic;
    if (name == "two_temp" || name == "two-temp") return CurveEstimator::TwoTemp;
    return std::nullopt;
}

std::vector<SweepRow> sweep_rlct(const SweepSpec& spec) {
    require(!spec.models.empty(), "sweep needs at least one model");
    require(spec.from <= spec.to, "sweep range needs from <= to");
    require(spec.from >= 0, "sweep range must be nonnegative");

    std::vector<SweepRow> rows;
    rows.reserve(static_cast<std::size_t>(spec.to - spec.from + 1) * spec.models.size());
    for (int v = spec.from; v <= spec.to; ++v) {
        for (Family model : spec.models) {
            SweepRow row;
            row.axis_value = v;
            row.model = model;
            try {
                RlctResult r = sweep_eval(spec, model, v);
                row.lambda_rational = to_string(r.lambda);
                row.lambda_float = to_double(r.lambda);
                row.multiplicity = r.multiplicity;
                row.case_tag = case_name(r.case_tag);
                row.status = "ok";
            } catch (const std::invalid_argument&) {
                row.status = "invalid";
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

double trimmed_mean(std::vector<double> values, double trim) {
    require(!values.empty(), "trimmed mean of an empty set");
    require(trim >= 0.0 && trim < 0.5, "trim fraction must lie in [0, 0.5)");
    std::sort(values.begin(), values.end());
    std::size_t k = static_cast<std::size_t>(trim * values.size());
    double sum = 0.0;
    for (std::size_t i = k; i < values.size() - k; ++i) sum += values[i];
    return sum / static_cast<double>(values.size() - 2 * k);
}

double trimmed_mean_std_error(std::vector<double> values, double trim) {
    require(!values.empty(), "trimmed mean of an empty set");
    require(trim >= 0.0 && trim < 0.5, "trim fraction must lie in [0, 0.5)");
    std::sort(values.begin(), values.end());
    std::size_t k = static_cast<std::size_t>(trim * values.size());
    std::size_t m = values.size() - 2 * k;
    if (m < 2) return 0.0;
    double mean = 0.0;
    for (std::size_t i = k; i < values.size() - k; ++i) mean += values[i];
    mean /= static_cast<double>(m);
    double ss = 0.0;
    for (std::size_t i = k; i < values.size() - k; ++i) {
        ss += (values[i] - mean) * (values[i] - mean);
    }
    return std::sqrt(ss / static_cast<double>(m - 1) / static_cast<double>(m));
}

FitResult fit_lambda(const std::vector<FitPoint>& points) {
    require(!points.empty(), "lambda fit needs at least one point");
    double swxx = 0.0, swxy = 0.0;
    for (const FitPoint& p : points) {
        double w = p.std_error > 0.0 ? 1.0 / (p.std_error * p.std_error) : 1.0;
        swxx += w * p.x * p.x;
        swxy += w * p.x * p.y;
    }
    require(swxx > 0.0, "lambda fit needs a nonzero regressor");
    FitResult r;
    r.slope = swxy / swxx;
    r.std_error = std::sqrt(1.0 / swxx);
    return r;
}

FitResult fit_lambda_curve(const std::vector<CurvePoint>& per_n, FitMode mode,
                           const std::vector<double>& offsets) {
    require(offsets.empty() || offsets.size() == per_n.size(),
            "offsets must be empty or match the n grid");
    std::vector<FitPoint> points;
    points.reserve(per_n.size());
    for (std::size_t i = 0; i < per_n.size(); ++i) {
        FitPoint p;
        double n = static_cast<double>(per_n[i].n);
        p.x = mode == FitMode::InverseN ? 1.0 / n : std::log(n);
        p.y = per_n[i].mean - (offsets.empty() ? 0.0 : offsets[i]);
        p.std_error = per_n[i].std_error;
        points.push_back(p);
    }
    return fit_lambda(points);
}

CurveResult summarize_curve(const CurveSpec& spec, std::vector<CurvePoint> per_n) {
    require(!per_n.empty(), "curve summary needs at least one n point");
    for (CurvePoint& point : per_n) {
        std::vector<double> ok = finite_values(point.estimates);
        point.failures = static_cast<int>(point.estimates.size() - ok.size());
        double total = static_cast<double>(point.estimates.size());
        if (ok.empty() ||
            static_cast<double>(point.failures) > spec.max_failure_rate * total) {
            throw estimation_error("too many failed replicates at n = " +
                                   std::to_string(point.n) + " (" +
                                   std::to_string(point.failures) + " of " +
                                   std::to_string(point.estimates.size()) + ")");
        }
        point.mean = trimmed_mean(ok, spec.trim);
        point.std_error = trimmed_mean_std_error(ok, spec.trim);
    }

    CurveResult result;
    result.estimator = spec.estimator;
    result.lambda_theory = spec.lambda_theory;
    result.tolerance = spec.tolerance;

    switch (spec.estimator) {
        case CurveEstimator::GenError: {
            FitResult fit = fit_lambda_curve(per_n, FitMode::InverseN, {});
            result.lambda_hat = fit.slope;
            result.lambda_hat_se = fit.std_error;
            break;
        }
        case CurveEstimator::Wbic: {
            // estimates already hold the information criterion minus n * S_n
            FitResult fit = fit_lambda_curve(per_n, FitMode::LogN, {});
            result.lambda_hat = fit.slope;
            result.lambda_hat_se = fit.std_error;
            break;
        }
        case CurveEstimator::TwoTemp: {
            // each replicate is already a threshold estimate; pool and trim
            std::vector<double> pooled;
            for (const CurvePoint& point : per_n) {
                std::vector<double> ok = finite_values(point.estimates);
                pooled.insert(pooled.end(), ok.begin(), ok.end());
            }
            result.lambda_hat = trimmed_mean(pooled, spec.trim);
            result.lambda_hat_se = trimmed_mean_std_error(pooled, spec.trim);
            break;
        }
    }

    result.per_n = std::move(per_n);
    if (spec.lambda_theory) {
        result.pass = std::abs(result.lambda_hat - *spec.lambda_theory) <=
                      spec.tolerance * std::abs(*spec.lambda_theory);
    } else {
        result.pass = true;
    }
    return result;
}

CurveResult run_learning_curve(const CurveSpec& spec) {
    validate_spec(spec.model);
    require(!spec.n_grid.empty(), "n_grid must be nonempty");
    long min_n = spec.estimator == CurveEstimator::GenError ? 1 : 3;
    for (long n : spec.n_grid) {
        require(n >= min_n, "n_grid entries must be >= " + std::to_string(min_n) +
                                " for this estimator");
    }
    require(spec.replicates >= 1, "replicates must be >= 1");
    require(spec.trim >= 0.0 && spec.trim < 0.5, "trim fraction must lie in [0, 0.5)");
    require(spec.max_failure_rate >= 0.0 && spec.max_failure_rate <= 1.0,
            "max_failure_rate must lie in [0, 1]");
    require(spec.n_test >= 2, "n_test must be >= 2");
    require(spec.n_resp >= 1, "n_resp must be >= 1");
    if (spec.estimator == CurveEstimator::TwoTemp) {
        require(spec.beta1_factor > 0.0 && spec.beta1_factor < spec.beta2_factor,
                "temperature factors must satisfy 0 < beta1_factor < beta2_factor");
    }
    if (spec.truth_rule == TruthRule::Explicit) {
        require(spec.truth.has_value(), "explicit truth rule needs a truth point");
    } else {
        require(spec.truth_half_width > 0.0, "truth_half_width must be > 0");
    }

    ParamPoint truth = spec.truth_rule == TruthRule::Explicit
                           ? *spec.truth
                           : sample_truth_uniform(spec.model, spec.truth_half_width,
                                                  derive_seed(spec.mcmc.seed, kTruthStream));
    validate_shapes(spec.model, truth);
    spec.prior.require_inside(truth);

    InputSpec input = spec.input_moment ? InputSpec::gaussian(*spec.input_moment)
                                        : InputSpec::standard(spec.model.dims.n_in);
    validate_input(input, spec.model.dims.n_in);

    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<CurvePoint> per_n(spec.n_grid.size());
    for (std::size_t i = 0; i < spec.n_grid.size(); ++i) {
        per_n[i].n = spec.n_grid[i];
        per_n[i].estimates.assign(spec.replicates, nan);
        per_n[i].std_errors.assign(spec.replicates, 0.0);
        per_n[i].diag_flags.assign(spec.replicates, std::string());
    }

    long units = static_cast<long>(spec.n_grid.size()) * spec.replicates;
    parallel_for(units, spec.threads, [&](long u) {
        std::size_t ni = static_cast<std::size_t>(u / spec.replicates);
        int rep = static_cast<int>(u % spec.replicates);
        long n = spec.n_grid[ni];
        std::uint64_t unit_seed = derive_seed(spec.mcmc.seed, static_cast<std::uint64_t>(n),
                                              static_cast<std::uint64_t>(rep));
        try {
            Dataset data =
                sample_dataset(spec.model, truth, input, n, derive_seed(unit_seed, 1));
            McmcConfig cfg = spec.mcmc;
            cfg.seed = derive_seed(unit_seed, 2);
            cfg.threads = 1;  // the outer loop owns the parallelism
            switch (spec.estimator) {
                case CurveEstimator::GenError: {
                    cfg.beta = 1.0;
                    ChainResult chain = tempered_posterior_sample(spec.model, data,
                                                                  spec.prior, cfg);
                    if (!chain.diag_ok) throw estimation_error(chain.diag_message);
                    GenErrorEstimate est = estimate_generalization_error(
                        chain, truth, input, spec.n_test, derive_seed(unit_seed, 3),
                        spec.n_resp);
                    per_n[ni].estimates[rep] = est.value;
                    per_n[ni].std_errors[rep] = est.std_error;
                    if (est.flagged) per_n[ni].diag_flags[rep] = est.message;
                    break;
                }
                case CurveEstimator::Wbic: {
                    double w = wbic(spec.model, data, spec.prior, cfg);
                    per_n[ni].estimates[rep] =
                        w - static_cast<double>(n) * empirical_entropy(truth, data);
                    break;
                }
                case CurveEstimator::TwoTemp: {
                    double logn = std::log(static_cast<double>(n));
                    per_n[ni].estimates[rep] =
                        rlct_two_temperature(spec.model, data, spec.prior, cfg,
                                             spec.beta1_factor / logn,
                                             spec.beta2_factor / logn);
                    break;
                }
            }
        } catch (const estimation_error& e) {
            per_n[ni].diag_flags[rep] = std::string("failed: ") + e.what();
        }
    });

    return summarize_curve(spec, std::move(per_n));
}

std::string sweep_csv_string(const std::vector<SweepRow>& rows) {
    std::string out = "axis,model,lambda_rational,lambda_float,multiplicity,case,status\n";
    for (const SweepRow& row : rows) {
        out += std::to_string(row.axis_value);
        out += ',';
        out += family_name(row.model);
        out += ',';
        if (row.status == "ok") {
            out += row.lambda_rational;
            out += ',';
            out += fmt_double(row.lambda_float);
            out += ',';
            out += std::to_string(row.multiplicity);
            out += ',';
            out += row.case_tag;
        } else {
            out += ",,,";
        }
        out += ',';
        out += row.status;
        out += '\n';
    }
    return out;
}

std::string curve_csv_string(const CurveResult& result) {
    std::string out = "n,replicate,estimate,std_error,diag_flags\n";
    for (const CurvePoint& point : result.per_n) {
        for (std::size_t r = 0; r < point.estimates.size(); ++r) {
            out += std::to_string(point.n);
            out += ',';
            out += std::to_string(r);
            out += ',';
            out += fmt_double(point.estimates[r]);
            out += ',';
            out += fmt_double(r < point.std_errors.size() ? point.std_errors[r] : 0.0);
            out += ',';
            out += csv_field(r < point.diag_flags.size() ? point.diag_flags[r] : "");
            out += '\n';
        }
    }
    return out;
}

void emit_csv(const std::vector<SweepRow>& rows, const std::string& path) {
    write_text_file(path, sweep_csv_string(rows));
}

void emit_csv(const CurveResult& result, const std::string& path) {
    write_text_file(path, curve_csv_string(result));
}

std::string sweep_svg_string(const std::vector<SweepRow>& rows) {
    require(!rows.empty(), "empty sweep table");
    std::vector<Family> models;
    for (const SweepRow& row : rows) {
        if (std::find(models.begin(), models.end(), row.model) == models.end()) {
            models.push_back(row.model);
        }
    }

    double x_min = rows.front().axis_value, x_max = rows.front().axis_value;
    double y_min = 0.0, y_max = 1.0;
    bool have_y = false;
    for (const SweepRow& row : rows) {
        x_min = std::min(x_min, static_cast<double>(row.axis_value));
        x_max = std::max(x_max, static_cast<double>(row.axis_value));
        if (row.status != "ok") continue;
        if (!have_y) {
            y_min = y_max = row.lambda_float;
            have_y = true;
        } else {
            y_min = std::min(y_min, row.lambda_float);
            y_max = std::max(y_max, row.lambda_float);
        }
    }
    require(have_y, "sweep table has no plottable rows");
    if (x_max == x_min) x_max = x_min + 1.0;
    double pad = 0.05 * std::max(y_max - y_min, 1e-9);
    y_min -= pad;
    y_max += pad;

    const double width = 640.0, height = 400.0;
    const double left = 62.0, right = 16.0, top = 18.0, bottom = 46.0;
    auto px = [&](double v) {
        return left + (v - x_min) / (x_max - x_min) * (width - left - right);
    };
    auto py = [&](double v) {
        return height - bottom - (v - y_min) / (y_max - y_min) * (height - top - bottom);
    };

    static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" "
           "viewBox=\"0 0 640 400\">\n";
    svg << "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
    svg << "<line x1=\"" << fmt_fixed(left, 2) << "\" y1=\"" << fmt_fixed(height - bottom, 2)
        << "\" x2=\"" << fmt_fixed(width - right, 2) << "\" y2=\""
        << fmt_fixed(height - bottom, 2) << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << fmt_fixed(left, 2) << "\" y1=\"" << fmt_fixed(top, 2) << "\" x2=\""
        << fmt_fixed(left, 2) << "\" y2=\"" << fmt_fixed(height - bottom, 2)
        << "\" stroke=\"black\"/>\n";

    for (int t = 0; t <= 4; ++t) {
        double xv = x_min + (x_max - x_min) * t / 4.0;
        double yv = y_min + (y_max - y_min) * t / 4.0;
        svg << "<text x=\"" << fmt_fixed(px(xv), 2) << "\" y=\"" << fmt_fixed(height - bottom + 18, 2)
            << "\" font-size=\"11\" text-anchor=\"middle\">" << fmt_fixed(xv, 1) << "</text>\n";
        svg << "<text x=\"" << fmt_fixed(left - 6, 2) << "\" y=\"" << fmt_fixed(py(yv) + 4, 2)
            << "\" font-size=\"11\" text-anchor=\"end\">" << fmt_fixed(yv, 2) << "</text>\n";
    }

    for (std::size_t mi = 0; mi < models.size(); ++mi) {
        Family model = models[mi];
        const char* color = kColors[mi % 4];
        bool dashed = model == Family::CBM;
        std::ostringstream path;
        bool open = false;
        for (const SweepRow& row : rows) {
            if (row.model != model) continue;
            if (row.status != "ok") {
                open = false;  // gap in the series
                continue;
            }
            path << (open ? " L " : " M ") << fmt_fixed(px(row.axis_value), 2) << ' '
                 << fmt_fixed(py(row.lambda_float), 2);
            open = true;
            svg << "<circle cx=\"" << fmt_fixed(px(row.axis_value), 2) << "\" cy=\""
                << fmt_fixed(py(row.lambda_float), 2) << "\" r=\"2.5\" fill=\"" << color
                << "\"/>\n";
        }
        std::string d = path.str();
        if (!d.empty()) {
            svg << "<path d=\"" << d.substr(1) << "\" fill=\"none\" stroke=\"" << color
                << "\" stroke-width=\"1.5\"";
            if (dashed) svg << " stroke-dasharray=\"6 4\"";
            svg << "/>\n";
        }
        double ly = top + 14.0 * (mi + 1);
        svg << "<line x1=\"" << fmt_fixed(width - right - 120, 2) << "\" y1=\""
            << fmt_fixed(ly - 4, 2) << "\" x2=\"" << fmt_fixed(width - right - 96, 2)
            << "\" y2=\"" << fmt_fixed(ly - 4, 2) << "\" stroke=\"" << color
            << "\" stroke-width=\"1.5\"" << (dashed ? " stroke-dasharray=\"6 4\"" : "")
            << "/>\n";
        svg << "<text x=\"" << fmt_fixed(width - right - 90, 2) << "\" y=\"" << fmt_fixed(ly, 2)
            << "\" font-size=\"11\">" << family_name(model) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

void emit_svg(const std::vector<SweepRow>& rows, const std::string& path) {
    write_text_file(path, sweep_svg_string(rows));
}

nlohmann::json curve_report_json(const CurveSpec& spec, const CurveResult& result) {
    nlohmann::json js;
    js["model"] = spec_to_json(spec.model);
    js["estimator"] = estimator_name(spec.estimator);
    js["truth_rule"] = spec.truth_rule == TruthRule::Explicit ? "explicit" : "uniform";
    js["truth_half_width"] = spec.truth_half_width;
    if (spec.truth) js["truth"] = params_to_json(*spec.truth);
    if (spec.input_moment) js["input_moment"] = matrix_to_json(*spec.input_moment);
    js["n_grid"] = spec.n_grid;
    js["replicates"] = spec.replicates;
    js["seed"] = spec.mcmc.seed;
    js["prior_half_width"] = spec.prior.half_width;
    js["mcmc"] = {{"n_chains", spec.mcmc.n_chains},
                  {"n_burn", spec.mcmc.n_burn},
                  {"n_keep", spec.mcmc.n_keep},
                  {"thin", spec.mcmc.thin},
                  {"target_accept", spec.mcmc.target_accept}};
    js["n_test"] = spec.n_test;
    js["n_resp"] = spec.n_resp;
    js["beta1_factor"] = spec.beta1_factor;
    js["beta2_factor"] = spec.beta2_factor;
    js["trim"] = spec.trim;
    js["max_failure_rate"] = spec.max_failure_rate;

    nlohmann::json per_n = nlohmann::json::array();
    for (const CurvePoint& point : result.per_n) {
        nlohmann::json pj;
        pj["n"] = point.n;
        pj["mean"] = point.mean;
        pj["std_error"] = point.std_error;
        pj["failures"] = point.failures;
        pj["estimates"] = point.estimates;
        pj["std_errors"] = point.std_errors;
        pj["diag_flags"] = point.diag_flags;
        per_n.push_back(std::move(pj));
    }

    nlohmann::json report;
    report["spec"] = std::move(js);
    report["per_n"] = std::move(per_n);
    report["lambda_hat"] = result.lambda_hat;
    report["lambda_hat_se"] = result.lambda_hat_se;
    if (result.lambda_theory) {
        report["lambda_theory"] = *result.lambda_theory;
    } else {
        report["lambda_theory"] = nullptr;
    }
    report["tolerance"] = result.tolerance;
    report["pass"] = result.pass;
    return report;
}

}  // namespace slt
