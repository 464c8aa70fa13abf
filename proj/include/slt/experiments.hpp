#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "slt/estimators.hpp"

namespace slt {

enum class Axis { Concepts, Hidden };

std::string axis_name(Axis a);

// RLCT sweep along one integer axis, everything else fixed. When `kinds` is
// set the typed formulas are used; `composed` additionally splits M and K
// into real/categorical blocks (the axis value is the total, the real part
// stays at the composed field's value).
struct SweepSpec {
    std::vector<Family> models;
    ModelDims base;
    Axis axis = Axis::Concepts;
    int from = 1;
    int to = 1;
    std::optional<ResponseKinds> kinds;
    std::optional<ComposedDims> composed;
};

struct SweepRow {
    int axis_value = 0;
    Family model = Family::CBM;
    std::string lambda_rational;  // empty for invalid rows
    double lambda_float = 0.0;
    int multiplicity = 0;
    std::string case_tag;
    std::string status;  // "ok" or "invalid"
};

// Rows ordered by axis value then by the model order given in the spec.
// Tuples that violate a model's preconditions become status "invalid" rows.
std::vector<SweepRow> sweep_rlct(const SweepSpec& spec);

enum class CurveEstimator { GenError, Wbic, TwoTemp };

std::string estimator_name(CurveEstimator e);
std::optional<CurveEstimator> estimator_from_name(const std::string& name);

enum class TruthRule { UniformEntries, Explicit };

// Learning-curve study: replicate datasets per n, one estimator, trimmed
// aggregation, then a weighted least-squares fit of lambda.
struct CurveSpec {
    ModelSpec model;
    TruthRule truth_rule = TruthRule::UniformEntries;
    double truth_half_width = 1.0;
    std::optional<ParamPoint> truth;  // required for TruthRule::Explicit
    std::optional<Eigen::MatrixXd> input_moment;  // default: identity
    std::vector<long> n_grid;
    int replicates = 100;
    McmcConfig mcmc;  // seed field is the master seed
    PriorSpec prior;
    CurveEstimator estimator = CurveEstimator::GenError;
    long n_test = 2000;
    long n_resp = 1;
    double beta1_factor = 1.0;  // two-temperature betas: factor / log n
    double beta2_factor = 1.5;
    double trim = 0.05;                  // per-tail trimming fraction
    double max_failure_rate = 0.2;       // abort threshold per n
    std::optional<double> lambda_theory;
    double tolerance = 0.2;  // relative, for the pass flag
    int threads = 1;
};

struct CurvePoint {
    long n = 0;
    double mean = 0.0;       // trimmed mean over replicates
    double std_error = 0.0;  // of the trimmed mean
    std::vector<double> estimates;       // raw, one per replicate
    std::vector<double> std_errors;      // per replicate (0 when not defined)
    std::vector<std::string> diag_flags; // empty string = clean
    int failures = 0;
};

struct CurveResult {
    CurveEstimator estimator = CurveEstimator::GenError;
    std::vector<CurvePoint> per_n;
    double lambda_hat = 0.0;
    double lambda_hat_se = 0.0;
    std::optional<double> lambda_theory;
    double tolerance = 0.2;
    bool pass = false;
};

// Deterministic for a fixed master seed, independent of thread count:
// every (n, replicate) unit derives its own seed. A point with more than
// max_failure_rate failed replicates aborts with estimation_error.
CurveResult run_learning_curve(const CurveSpec& spec);

// Aggregation + fit split out from run_learning_curve so synthetic
// per-replicate tables can exercise it directly.
CurveResult summarize_curve(const CurveSpec& spec, std::vector<CurvePoint> per_n);

struct FitPoint {
    double x = 0.0;
    double y = 0.0;
    double std_error = 0.0;
};

struct FitResult {
    double slope = 0.0;
    double std_error = 0.0;
};

enum class FitMode { InverseN, LogN };

// Weighted least squares through the origin, weights 1/SE^2 (unit weights
// where SE = 0). mode selects the regressor built from n: 1/n or log n.
FitResult fit_lambda(const std::vector<FitPoint>& points);
FitResult fit_lambda_curve(const std::vector<CurvePoint>& per_n, FitMode mode,
                           const std::vector<double>& offsets);

// Trimmed mean helpers used for replicate aggregation.
double trimmed_mean(std::vector<double> values, double trim);
double trimmed_mean_std_error(std::vector<double> values, double trim);

// CSV emitters, byte-stable given identical inputs.
// Sweep columns:  axis,model,lambda_rational,lambda_float,multiplicity,case,status
// Curve columns:  n,replicate,estimate,std_error,diag_flags
void emit_csv(const std::vector<SweepRow>& rows, const std::string& path);
void emit_csv(const CurveResult& result, const std::string& path);
std::string sweep_csv_string(const std::vector<SweepRow>& rows);
std::string curve_csv_string(const CurveResult& result);

// Minimal self-contained SVG line plot of a sweep table: one series per
// model, dashed for the bottleneck model, gaps at invalid rows.
void emit_svg(const std::vector<SweepRow>& rows, const std::string& path);
std::string sweep_svg_string(const std::vector<SweepRow>& rows);

// Report schema: {spec, per_n, lambda_hat, lambda_hat_se, lambda_theory,
// tolerance, pass}.
nlohmann::json curve_report_json(const CurveSpec& spec, const CurveResult& result);

}  // namespace slt
