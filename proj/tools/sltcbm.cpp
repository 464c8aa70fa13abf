// sltcbm: exact thresholds and Bayesian asymptotics for three-layer linear
// networks. Subcommands: rlct, compare, sweep, simulate, estimate.
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "slt/dataset_io.hpp"
#include "slt/errors.hpp"
#include "slt/experiments.hpp"
#include "slt/parallel.hpp"

namespace {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

constexpr std::uint64_t kTruthStream = 0x545255544800ULL;

struct DimFlags {
    std::string model = "cbm";
    int n_in = 1;
    int n_out = 1;
    int concepts = 0;
    int hidden = 1;
    int true_rank = 0;
    double gamma = 1.0;
    std::string task;          // empty = plain real
    std::string concept_kind;  // empty = plain real
    std::vector<int> composed;
};

void add_dim_flags(CLI::App* cmd, DimFlags& f, bool with_model) {
    if (with_model) {
        cmd->add_option("--model", f.model, "cbm|multitask|standard")
            ->check(CLI::IsMember({"cbm", "multitask", "standard"}));
    }
    cmd->add_option("--n-in", f.n_in, "input dimension N");
    cmd->add_option("--n-out", f.n_out, "task output dimension M");
    cmd->add_option("--concepts", f.concepts, "concept count K");
    cmd->add_option("--hidden", f.hidden, "hidden width H (multitask/standard)");
    cmd->add_option("--true-rank", f.true_rank, "rank of the true composite map H0");
    cmd->add_option("--gamma", f.gamma, "concept loss weight (bottleneck model)");
    cmd->add_option("--task", f.task, "task response kind: real|categorical")
        ->check(CLI::IsMember({"real", "categorical"}));
    cmd->add_option("--concept-kind", f.concept_kind, "concept response kind: real|binary")
        ->check(CLI::IsMember({"real", "binary"}));
    cmd->add_option("--composed", f.composed,
                    "real/categorical block sizes MR,MC,KR,KC (composed outputs)")
        ->delimiter(',')
        ->expected(4);
}

slt::ModelDims dims_from_flags(const DimFlags& f) {
    slt::ModelDims d;
    d.n_in = f.n_in;
    d.n_out = f.n_out;
    d.n_concepts = f.concepts;
    d.hidden = f.hidden;
    d.true_rank = f.true_rank;
    d.gamma = f.gamma;
    return d;
}

std::optional<slt::ResponseKinds> kinds_from_flags(const DimFlags& f) {
    if (f.task.empty() && f.concept_kind.empty()) return std::nullopt;
    slt::ResponseKinds k;
    if (f.task == "categorical") k.task = slt::TaskKind::Categorical;
    if (f.concept_kind == "binary") k.concepts = slt::ConceptKind::BernoulliMulti;
    return k;
}

std::optional<slt::ComposedDims> composed_from_flags(const DimFlags& f) {
    if (f.composed.empty()) return std::nullopt;
    slt::ComposedDims c;
    c.n_in = f.n_in;
    c.m_real = f.composed[0];
    c.m_cat = f.composed[1];
    c.k_real = f.composed[2];
    c.k_cat = f.composed[3];
    return c;
}

json read_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw slt::io_error("cannot open config: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw slt::io_error("read failed: " + path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config " + path + " is not valid JSON: " + e.what());
    }
}

void write_report(const ojson& report, const std::string& path) {
    std::string text = report.dump(2) + "\n";
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw slt::io_error("cannot open for writing: " + path);
    out << text;
    out.flush();
    if (!out) throw slt::io_error("write failed: " + path);
}

int env_threads() {
    const char* env = std::getenv("SLT_CBM_THREADS");
    if (env == nullptr || *env == '\0') return 0;
    try {
        return std::stoi(env);
    } catch (const std::exception&) {
        throw std::invalid_argument("SLT_CBM_THREADS must be an integer");
    }
}

// flag > config > environment > hardware
int pick_threads(int flag_value, int config_value) {
    if (flag_value > 0) return flag_value;
    if (config_value > 0) return config_value;
    int env = env_threads();
    return env > 0 ? env : slt::resolve_threads(0);
}

slt::McmcConfig mcmc_from_json(const json& j, slt::McmcConfig base) {
    if (j.is_null()) return base;
    base.n_chains = j.value("n_chains", base.n_chains);
    base.n_burn = j.value("n_burn", base.n_burn);
    base.n_keep = j.value("n_keep", base.n_keep);
    base.thin = j.value("thin", base.thin);
    base.target_accept = j.value("target_accept", base.target_accept);
    base.beta = j.value("beta", base.beta);
    base.seed = j.value("seed", base.seed);
    base.threads = j.value("threads", base.threads);
    return base;
}

slt::PriorSpec prior_from_json(const json& cfg) {
    slt::PriorSpec prior;
    if (cfg.contains("prior")) prior.half_width = cfg.at("prior").value("half_width", 5.0);
    if (cfg.contains("prior_half_width")) {
        prior.half_width = cfg.at("prior_half_width").get<double>();
    }
    return prior;
}

ojson rlct_to_json(const slt::RlctResult& r) {
    ojson out;
    out["lambda"] = slt::to_string(r.lambda);
    out["lambda_float"] = slt::to_double(r.lambda);
    out["multiplicity"] = r.multiplicity;
    out["case"] = slt::case_name(r.case_tag);
    return out;
}

slt::RlctResult rlct_from_flags(const DimFlags& f) {
    slt::ModelDims d = dims_from_flags(f);
    auto kinds = kinds_from_flags(f);
    auto composed = composed_from_flags(f);
    auto family = slt::family_from_name(f.model);
    if (!family) throw std::invalid_argument("unknown --model '" + f.model + "'");

    if (composed) {
        switch (*family) {
            case slt::Family::CBM:
                return slt::rlct_cbm_composed(*composed);
            case slt::Family::Multitask:
                return slt::rlct_multitask_composed(*composed, d.hidden, d.true_rank);
            default:
                throw std::invalid_argument("--composed is not defined for --model standard");
        }
    }
    switch (*family) {
        case slt::Family::CBM:
            return kinds ? slt::rlct_cbm_typed(d, *kinds) : slt::rlct_cbm(d);
        case slt::Family::Multitask:
            return kinds ? slt::rlct_multitask_typed(d, *kinds) : slt::rlct_multitask(d);
        default:
            if (d.n_concepts != 0) {
                throw std::invalid_argument("--model standard requires --concepts 0");
            }
            return kinds ? slt::rlct_multitask_typed(d, *kinds) : slt::rlct_multitask(d);
    }
}

// Simulation config: model spec fields plus optional "truth" (explicit
// weights), "truth_half_width" and "input_moment".
struct SimContext {
    slt::ModelSpec spec;
    slt::ParamPoint truth;
    slt::InputSpec input = slt::InputSpec::standard(1);
};

SimContext sim_context(const json& cfg, const json& model_field, std::uint64_t seed) {
    SimContext ctx;
    ctx.spec = slt::spec_from_json(model_field);
    if (cfg.contains("truth")) {
        ctx.truth = slt::params_from_json(cfg.at("truth"));
        slt::validate_shapes(ctx.spec, ctx.truth);
    } else {
        double hw = cfg.value("truth_half_width", 1.0);
        ctx.truth = slt::sample_truth_uniform(ctx.spec, hw, slt::derive_seed(seed, kTruthStream));
    }
    if (cfg.contains("input_moment")) {
        ctx.input = slt::InputSpec::gaussian(slt::matrix_from_json(cfg.at("input_moment")));
    } else {
        ctx.input = slt::InputSpec::standard(ctx.spec.dims.n_in);
    }
    slt::validate_input(ctx.input, ctx.spec.dims.n_in);
    return ctx;
}

slt::CurveSpec curve_spec_from_json(const json& cfg) {
    slt::CurveSpec spec;
    if (!cfg.contains("model")) throw std::invalid_argument("curve config needs a 'model' field");
    spec.model = slt::spec_from_json(cfg.at("model"));
    std::string rule = cfg.value("truth_rule", "uniform");
    if (rule == "explicit") {
        spec.truth_rule = slt::TruthRule::Explicit;
    } else if (rule == "uniform") {
        spec.truth_rule = slt::TruthRule::UniformEntries;
    } else {
        throw std::invalid_argument("truth_rule must be uniform|explicit");
    }
    spec.truth_half_width = cfg.value("truth_half_width", 1.0);
    if (cfg.contains("truth")) spec.truth = slt::params_from_json(cfg.at("truth"));
    if (cfg.contains("input_moment")) {
        spec.input_moment = slt::matrix_from_json(cfg.at("input_moment"));
    }
    if (!cfg.contains("n_grid")) throw std::invalid_argument("curve config needs an 'n_grid' field");
    spec.n_grid = cfg.at("n_grid").get<std::vector<long>>();
    spec.replicates = cfg.value("replicates", 100);
    spec.mcmc = mcmc_from_json(cfg.value("mcmc", json()), slt::McmcConfig{});
    spec.prior = prior_from_json(cfg);
    if (cfg.contains("estimator")) {
        auto est = slt::estimator_from_name(cfg.at("estimator").get<std::string>());
        if (!est) throw std::invalid_argument("estimator must be gen_error|wbic|two_temp");
        spec.estimator = *est;
    }
    spec.n_test = cfg.value("n_test", spec.n_test);
    spec.n_resp = cfg.value("n_resp", spec.n_resp);
    spec.beta1_factor = cfg.value("beta1_factor", spec.beta1_factor);
    spec.beta2_factor = cfg.value("beta2_factor", spec.beta2_factor);
    spec.trim = cfg.value("trim", spec.trim);
    spec.max_failure_rate = cfg.value("max_failure_rate", spec.max_failure_rate);
    if (cfg.contains("lambda_theory") && !cfg.at("lambda_theory").is_null()) {
        spec.lambda_theory = cfg.at("lambda_theory").get<double>();
    }
    spec.tolerance = cfg.value("tolerance", spec.tolerance);
    spec.threads = cfg.value("threads", spec.threads);
    return spec;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Exact learning-coefficient formulas and Bayesian asymptotics "
                 "for three-layer linear networks"};
    app.require_subcommand(1);

    DimFlags rlct_flags;
    auto* rlct_cmd = app.add_subcommand("rlct", "Exact threshold and multiplicity");
    add_dim_flags(rlct_cmd, rlct_flags, true);

    DimFlags cmp_flags;
    auto* cmp_cmd = app.add_subcommand(
        "compare", "Order the bottleneck and multitask thresholds for one architecture");
    add_dim_flags(cmp_cmd, cmp_flags, false);

    DimFlags sweep_flags;
    std::string vary = "k";
    int sweep_from = 1, sweep_to = 1;
    std::vector<std::string> sweep_models{"cbm", "multitask"};
    std::string sweep_out, sweep_svg;
    auto* sweep_cmd = app.add_subcommand("sweep", "Threshold table along one axis (CSV/SVG)");
    add_dim_flags(sweep_cmd, sweep_flags, false);
    sweep_cmd->add_option("--vary", vary, "axis: k (concepts) or h (hidden width)")
        ->check(CLI::IsMember({"k", "h"}));
    sweep_cmd->add_option("--from", sweep_from, "first axis value")->required();
    sweep_cmd->add_option("--to", sweep_to, "last axis value")->required();
    sweep_cmd->add_option("--models", sweep_models, "comma-separated families to tabulate")
        ->delimiter(',');
    sweep_cmd->add_option("--out", sweep_out, "CSV output path")->required();
    sweep_cmd->add_option("--svg", sweep_svg, "optional SVG output path");

    std::string sim_config, sim_out, sim_truth_out;
    long sim_n = 0;
    std::uint64_t sim_seed = 1;
    auto* sim_cmd = app.add_subcommand("simulate", "Draw a dataset and write JSONL");
    sim_cmd->add_option("--config", sim_config, "model config JSON")->required();
    sim_cmd->add_option("--n", sim_n, "number of records")->required();
    sim_cmd->add_option("--seed", sim_seed, "RNG seed");
    sim_cmd->add_option("--out", sim_out, "dataset output path (JSONL)")->required();
    sim_cmd->add_option("--truth-out", sim_truth_out, "write the realized truth weights here");

    std::string est_method, est_config, est_data, est_out, est_csv;
    std::uint64_t est_seed = 0;
    bool est_seed_given = false;
    int est_threads = 0;
    auto* est_cmd = app.add_subcommand("estimate", "Posterior-based estimators");
    est_cmd->add_option("--method", est_method, "curve|wbic|two-temp|volume")
        ->required()
        ->check(CLI::IsMember({"curve", "wbic", "two-temp", "volume"}));
    est_cmd->add_option("--config", est_config, "experiment config JSON")->required();
    est_cmd->add_option("--data", est_data, "dataset JSONL (wbic/two-temp)");
    est_cmd->add_option("--out", est_out, "report output path (default stdout)");
    est_cmd->add_option("--csv", est_csv, "per-replicate CSV (curve method)");
    est_cmd->add_option("--seed", est_seed, "override the config seed");
    est_cmd->add_option("--threads", est_threads, "worker cap (SLT_CBM_THREADS as fallback)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);  // prints help or the parse error
        return code == 0 ? 0 : 2;
    }
    est_seed_given = est_cmd->count("--seed") > 0;

    if (rlct_cmd->parsed()) {
        std::cout << rlct_to_json(rlct_from_flags(rlct_flags)).dump() << "\n";
        return 0;
    }

    if (cmp_cmd->parsed()) {
        slt::ComparisonVerdict v = slt::compare_models(dims_from_flags(cmp_flags));
        ojson out;
        out["relation"] = slt::relation_name(v.relation);
        out["case"] = slt::case_name(v.case_tag);
        out["lambda_cbm"] = slt::to_string(v.lambda_cbm);
        out["lambda_cbm_float"] = slt::to_double(v.lambda_cbm);
        out["lambda_multitask"] = slt::to_string(v.lambda_multitask);
        out["lambda_multitask_float"] = slt::to_double(v.lambda_multitask);
        std::cout << out.dump() << "\n";
        return 0;
    }

    if (sweep_cmd->parsed()) {
        slt::SweepSpec spec;
        for (const std::string& name : sweep_models) {
            auto fam = slt::family_from_name(name);
            if (!fam) throw std::invalid_argument("unknown family '" + name + "' in --models");
            spec.models.push_back(*fam);
        }
        spec.base = dims_from_flags(sweep_flags);
        spec.axis = vary == "k" ? slt::Axis::Concepts : slt::Axis::Hidden;
        spec.from = sweep_from;
        spec.to = sweep_to;
        spec.kinds = kinds_from_flags(sweep_flags);
        spec.composed = composed_from_flags(sweep_flags);
        std::vector<slt::SweepRow> rows = slt::sweep_rlct(spec);
        slt::emit_csv(rows, sweep_out);
        if (!sweep_svg.empty()) slt::emit_svg(rows, sweep_svg);
        return 0;
    }

    if (sim_cmd->parsed()) {
        json cfg = read_config(sim_config);
        SimContext ctx = sim_context(cfg, cfg, sim_seed);
        slt::Dataset data = slt::sample_dataset(ctx.spec, ctx.truth, ctx.input, sim_n, sim_seed);
        slt::write_jsonl(data, sim_out);
        if (!sim_truth_out.empty()) {
            write_report(ojson(slt::params_to_json(ctx.truth)), sim_truth_out);
        }
        return 0;
    }

    // estimate
    json cfg = read_config(est_config);
    int threads = pick_threads(est_threads, cfg.value("threads", 0));

    if (est_method == "curve") {
        slt::CurveSpec spec = curve_spec_from_json(cfg);
        if (est_seed_given) spec.mcmc.seed = est_seed;
        spec.threads = threads;
        slt::CurveResult result = slt::run_learning_curve(spec);
        write_report(ojson(slt::curve_report_json(spec, result)), est_out);
        if (!est_csv.empty()) slt::emit_csv(result, est_csv);
        return result.pass ? 0 : 3;
    }

    if (est_method == "volume") {
        if (!cfg.contains("model")) {
            throw std::invalid_argument("volume config needs a 'model' field");
        }
        std::uint64_t seed = est_seed_given ? est_seed : cfg.value("seed", 1ULL);
        SimContext ctx = sim_context(cfg, cfg.at("model"), seed);
        slt::PriorSpec prior = prior_from_json(cfg);
        std::vector<double> grid;
        if (cfg.contains("t_grid")) {
            grid = cfg.at("t_grid").get<std::vector<double>>();
        } else {
            grid = slt::geometric_grid(cfg.value("t_hi", 1e-1), cfg.value("t_lo", 1e-4),
                                       cfg.value("t_points", 7));
        }
        long n_samples = cfg.value("n_samples", 1000000L);
        const slt::ModelSpec spec = ctx.spec;
        const slt::ParamPoint truth = ctx.truth;
        const Eigen::MatrixXd moment = ctx.input.second_moment;
        std::function<double(const Eigen::VectorXd&)> kl = [&](const Eigen::VectorXd& w) {
            return slt::kl_closed_form(spec, slt::unflatten(spec, w), truth, moment);
        };
        slt::VolumeResult vr = slt::estimate_rlct_volume(kl, slt::param_count(spec), prior,
                                                         grid, n_samples, seed, threads);
        ojson report;
        report["method"] = "volume";
        report["lambda_hat"] = vr.lambda_hat;
        report["std_error"] = vr.std_error;
        report["intercept"] = vr.intercept;
        report["t_grid"] = vr.t_grid;
        report["hits"] = vr.hits;
        report["usable_points"] = vr.usable_points;
        report["n_samples"] = vr.n_samples;
        write_report(report, est_out);
        return 0;
    }

    // wbic and two-temp act on a stored dataset
    if (est_data.empty()) {
        throw std::invalid_argument("--method " + est_method + " requires --data");
    }
    slt::Dataset data = slt::read_jsonl(est_data);
    long n = data.n();
    slt::McmcConfig mcfg = mcmc_from_json(cfg.value("mcmc", json()), slt::McmcConfig{});
    if (est_seed_given) mcfg.seed = est_seed;
    mcfg.threads = threads;
    slt::PriorSpec prior = prior_from_json(cfg);

    std::optional<slt::ParamPoint> truth;
    if (cfg.contains("truth")) {
        truth = slt::params_from_json(cfg.at("truth"));
        slt::validate_shapes(data.spec, *truth);
    }

    ojson report;
    report["n"] = n;
    if (truth) report["empirical_entropy"] = slt::empirical_entropy(*truth, data);

    if (est_method == "wbic") {
        double w = slt::wbic(data.spec, data, prior, mcfg);
        report["method"] = "wbic";
        report["beta"] = n > 0 ? slt::wbic_beta(n) : 0.0;
        report["wbic"] = w;
        if (truth && n > 0) {
            double s = report["empirical_entropy"].get<double>();
            report["lambda_hat"] = (w - n * s) / std::log(static_cast<double>(n));
        }
    } else {
        double f1 = cfg.value("beta1_factor", 1.0);
        double f2 = cfg.value("beta2_factor", 1.5);
        if (n < 3) throw std::invalid_argument("two-temp needs a dataset with n >= 3");
        double logn = std::log(static_cast<double>(n));
        double lambda = slt::rlct_two_temperature(data.spec, data, prior, mcfg,
                                                  f1 / logn, f2 / logn);
        report["method"] = "two_temp";
        report["beta1"] = f1 / logn;
        report["beta2"] = f2 / logn;
        report["lambda_hat"] = lambda;
    }
    write_report(report, est_out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const slt::estimation_error& e) {
        std::cerr << "estimation error: " << e.what() << "\n";
        return 3;
    } catch (const slt::io_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
