#include "slt/models.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace slt {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

// Expected weight shapes: {wout rows, wout cols, win rows, win cols}.
struct Shapes {
    long wout_r, wout_c, win_r, win_c;
};

Shapes shapes_for(const ModelSpec& s) {
    const ModelDims& d = s.dims;
    if (s.family == Family::CBM) {
        return {d.n_out, d.n_concepts, d.n_concepts, d.n_in};
    }
    return {d.n_out + d.n_concepts, d.hidden, d.hidden, d.n_in};
}

bool task_is_gaussian(const ModelSpec& s) { return s.kinds.task == TaskKind::RealGaussian; }

bool concepts_are_gaussian(const ModelSpec& s) {
    return s.kinds.concepts == ConceptKind::RealGaussian;
}

// Concept-block logits: tilting a Bernoulli(sigmoid(h)) mass by the power
// gamma and renormalizing yields exactly Bernoulli(sigmoid(gamma*h)), so the
// bottleneck model scales the logits while multitask uses them as-is.
double concept_logit_scale(const ModelSpec& s) {
    return s.family == Family::CBM ? s.dims.gamma : 1.0;
}

int onehot_index(const Eigen::VectorXd& y) {
    int idx = -1;
    for (long j = 0; j < y.size(); ++j) {
        if (y[j] == 1.0) {
            if (idx >= 0) return -1;
            idx = static_cast<int>(j);
        } else if (y[j] != 0.0) {
            return -1;
        }
    }
    return idx;
}

double gaussian_block_logdens(const Eigen::VectorXd& value, const Eigen::VectorXd& mean,
                              double precision) {
    long dim = value.size();
    return 0.5 * dim * (std::log(precision) - kLog2Pi) -
           0.5 * precision * (value - mean).squaredNorm();
}

double bernoulli_block_logdens(const Eigen::VectorXd& bits, const Eigen::VectorXd& logits) {
    double total = 0.0;
    for (long k = 0; k < bits.size(); ++k) {
        total += detail::log_sigmoid(bits[k] == 1.0 ? logits[k] : -logits[k]);
    }
    return total;
}

double categorical_block_logdens(const Eigen::VectorXd& onehot, const Eigen::VectorXd& logits) {
    int idx = onehot_index(onehot);
    require(idx >= 0, "categorical response row is not one-hot");
    return logits[idx] - detail::log_sum_exp(logits);
}

}  // namespace

namespace detail {

double log_sigmoid(double z) {
    if (z >= 0.0) return -std::log1p(std::exp(-z));
    return z - std::log1p(std::exp(z));
}

double log_sum_exp(const Eigen::VectorXd& v) {
    double m = v.maxCoeff();
    double s = 0.0;
    for (long i = 0; i < v.size(); ++i) s += std::exp(v[i] - m);
    return m + std::log(s);
}

double bernoulli_kl(double logit_true, double logit_model) {
    double p = 1.0 / (1.0 + std::exp(-logit_true));
    return p * (log_sigmoid(logit_true) - log_sigmoid(logit_model)) +
           (1.0 - p) * (log_sigmoid(-logit_true) - log_sigmoid(-logit_model));
}

double categorical_kl(const Eigen::VectorXd& logits_true, const Eigen::VectorXd& logits_model) {
    double lse_t = log_sum_exp(logits_true);
    double lse_m = log_sum_exp(logits_model);
    double kl = 0.0;
    for (long j = 0; j < logits_true.size(); ++j) {
        double log_q = logits_true[j] - lse_t;
        double log_p = logits_model[j] - lse_m;
        kl += std::exp(log_q) * (log_q - log_p);
    }
    return kl;
}

double block_log_density(const ModelSpec& s, const Eigen::VectorXd& task_mean,
                         const Eigen::VectorXd& conc_mean, const Eigen::VectorXd& c,
                         const Eigen::VectorXd& y) {
    double total = 0.0;
    if (task_is_gaussian(s)) {
        total += gaussian_block_logdens(y, task_mean, 1.0);
    } else {
        total += categorical_block_logdens(y, task_mean);
    }
    if (s.dims.n_concepts > 0) {
        if (concepts_are_gaussian(s)) {
            double precision = s.family == Family::CBM ? s.dims.gamma : 1.0;
            total += gaussian_block_logdens(c, conc_mean, precision);
        } else {
            total += bernoulli_block_logdens(c, concept_logit_scale(s) * conc_mean);
        }
    }
    return total;
}

void sample_response(const ModelSpec& s, const Eigen::VectorXd& task_mean,
                     const Eigen::VectorXd& conc_mean, std::mt19937_64& rng,
                     Eigen::VectorXd& c_out, Eigen::VectorXd& y_out) {
    const ModelDims& dims = s.dims;
    std::normal_distribution<double> norm(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    y_out.resize(dims.n_out);
    c_out.resize(dims.n_concepts);

    if (task_is_gaussian(s)) {
        for (long j = 0; j < dims.n_out; ++j) y_out[j] = task_mean[j] + norm(rng);
    } else {
        // Inverse-CDF draw from softmax(task_mean).
        double lse = log_sum_exp(task_mean);
        double u = unif(rng), acc = 0.0;
        long pick = dims.n_out - 1;
        for (long j = 0; j < dims.n_out; ++j) {
            acc += std::exp(task_mean[j] - lse);
            if (u <= acc) {
                pick = j;
                break;
            }
        }
        y_out.setZero();
        y_out[pick] = 1.0;
    }

    if (concepts_are_gaussian(s)) {
        double sd = s.family == Family::CBM ? 1.0 / std::sqrt(dims.gamma) : 1.0;
        for (long k = 0; k < dims.n_concepts; ++k) c_out[k] = conc_mean[k] + sd * norm(rng);
    } else {
        double scale = concept_logit_scale(s);
        for (long k = 0; k < dims.n_concepts; ++k) {
            double p1 = 1.0 / (1.0 + std::exp(-scale * conc_mean[k]));
            c_out[k] = unif(rng) < p1 ? 1.0 : 0.0;
        }
    }
}

void block_maps(const ModelSpec& s, const ParamPoint& p, Eigen::MatrixXd& task_map,
                Eigen::MatrixXd& conc_map) {
    if (s.family == Family::CBM) {
        task_map = p.wout * p.win;
        conc_map = p.win;
    } else {
        Eigen::MatrixXd full = p.wout * p.win;
        task_map = full.topRows(s.dims.n_out);
        conc_map = full.bottomRows(s.dims.n_concepts);
    }
}

}  // namespace detail

void validate_spec(const ModelSpec& s) {
    switch (s.family) {
        case Family::CBM:
            validate_cbm_dims(s.dims);
            break;
        case Family::Multitask:
            validate_multitask_dims(s.dims);
            require(s.dims.n_concepts >= 1, "multitask requires n_concepts >= 1");
            break;
        case Family::Standard:
            require(s.dims.n_concepts == 0, "standard model requires n_concepts == 0");
            validate_multitask_dims(s.dims);
            break;
    }
    if (s.kinds.task == TaskKind::Categorical) {
        require(s.dims.n_out >= 2, "categorical task requires n_out >= 2");
    }
}

void validate_shapes(const ModelSpec& s, const ParamPoint& p) {
    Shapes sh = shapes_for(s);
    require(p.wout.rows() == sh.wout_r && p.wout.cols() == sh.wout_c,
            "wout shape does not match dims");
    require(p.win.rows() == sh.win_r && p.win.cols() == sh.win_c,
            "win shape does not match dims");
    require(p.wout.allFinite() && p.win.allFinite(), "weights must be finite");
}

int param_count(const ModelSpec& s) {
    Shapes sh = shapes_for(s);
    return static_cast<int>(sh.wout_r * sh.wout_c + sh.win_r * sh.win_c);
}

Eigen::VectorXd flatten(const ParamPoint& p) {
    Eigen::VectorXd w(p.wout.size() + p.win.size());
    w.head(p.wout.size()) = Eigen::Map<const Eigen::VectorXd>(p.wout.data(), p.wout.size());
    w.tail(p.win.size()) = Eigen::Map<const Eigen::VectorXd>(p.win.data(), p.win.size());
    return w;
}

ParamPoint unflatten(const ModelSpec& s, const Eigen::VectorXd& w) {
    Shapes sh = shapes_for(s);
    require(w.size() == sh.wout_r * sh.wout_c + sh.win_r * sh.win_c,
            "flat parameter vector has wrong length");
    ParamPoint p;
    p.wout = Eigen::Map<const Eigen::MatrixXd>(w.data(), sh.wout_r, sh.wout_c);
    p.win = Eigen::Map<const Eigen::MatrixXd>(w.data() + sh.wout_r * sh.wout_c, sh.win_r,
                                              sh.win_c);
    return p;
}

InputSpec InputSpec::standard(int n_in) {
    InputSpec in;
    in.second_moment = Eigen::MatrixXd::Identity(n_in, n_in);
    return in;
}

InputSpec InputSpec::gaussian(Eigen::MatrixXd moment) {
    InputSpec in;
    in.second_moment = std::move(moment);
    return in;
}

Eigen::MatrixXd InputSpec::chol() const {
    Eigen::LLT<Eigen::MatrixXd> llt(second_moment);
    require(llt.info() == Eigen::Success, "second_moment must be positive definite");
    return llt.matrixL();
}

void validate_input(const InputSpec& in, int n_in) {
    require(in.second_moment.rows() == n_in && in.second_moment.cols() == n_in,
            "second_moment must be n_in x n_in");
    require(in.second_moment.isApprox(in.second_moment.transpose(), 1e-12),
            "second_moment must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(in.second_moment);
    require(es.eigenvalues().minCoeff() > 1e-12, "second_moment must be positive definite");
}

void validate_dataset(const Dataset& d) {
    validate_spec(d.spec);
    const ModelDims& dims = d.spec.dims;
    require(d.X.cols() == dims.n_in, "X column count must equal n_in");
    require(d.C.cols() == dims.n_concepts, "C column count must equal n_concepts");
    require(d.Y.cols() == dims.n_out, "Y column count must equal n_out");
    require(d.C.rows() == d.X.rows() && d.Y.rows() == d.X.rows(),
            "X, C, Y must have the same number of rows");
    if (d.spec.kinds.task == TaskKind::Categorical) {
        for (long l = 0; l < d.n(); ++l) {
            require(onehot_index(d.Y.row(l).transpose()) >= 0,
                    "categorical Y rows must be exact one-hot");
        }
    }
    if (d.spec.kinds.concepts == ConceptKind::BernoulliMulti) {
        for (long l = 0; l < d.n(); ++l) {
            for (long k = 0; k < d.C.cols(); ++k) {
                require(d.C(l, k) == 0.0 || d.C(l, k) == 1.0,
                        "Bernoulli C entries must be 0 or 1");
            }
        }
    }
}

ParamPoint sample_truth_uniform(const ModelSpec& s, double half_width, std::uint64_t seed) {
    validate_spec(s);
    require(half_width > 0.0, "half_width must be > 0");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-half_width, half_width);
    Shapes sh = shapes_for(s);
    ParamPoint p;
    if (s.family == Family::CBM) {
        p.wout = Eigen::MatrixXd::NullaryExpr(sh.wout_r, sh.wout_c, [&] { return unif(rng); });
        p.win = Eigen::MatrixXd::NullaryExpr(sh.win_r, sh.win_c, [&] { return unif(rng); });
        return p;
    }
    // Rank-exact construction: product of (M+K) x H0 and H0 x N factors,
    // zero-padded to the declared H columns/rows.
    long h0 = s.dims.true_rank;
    p.wout = Eigen::MatrixXd::Zero(sh.wout_r, sh.wout_c);
    p.win = Eigen::MatrixXd::Zero(sh.win_r, sh.win_c);
    p.wout.leftCols(h0) =
        Eigen::MatrixXd::NullaryExpr(sh.wout_r, h0, [&] { return unif(rng); });
    p.win.topRows(h0) = Eigen::MatrixXd::NullaryExpr(h0, sh.win_c, [&] { return unif(rng); });
    return p;
}

int numeric_rank(const Eigen::MatrixXd& m) {
    if (m.rows() == 0 || m.cols() == 0) return 0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv[0] <= 0.0) return 0;
    double threshold = 1e-8 * sv[0];
    int rank = 0;
    for (long i = 0; i < sv.size(); ++i) {
        if (sv[i] > threshold) ++rank;
    }
    return rank;
}

Dataset sample_dataset(const ModelSpec& s, const ParamPoint& truth, const InputSpec& input,
                       long n, std::uint64_t seed) {
    validate_spec(s);
    validate_shapes(s, truth);
    validate_input(input, s.dims.n_in);
    require(n >= 0, "n must be >= 0");
    if (s.family != Family::CBM) {
        int rank = numeric_rank(truth.wout * truth.win);
        require(rank == s.dims.true_rank,
                "rank of the true composite map does not equal true_rank");
    }

    const ModelDims& dims = s.dims;
    Dataset data;
    data.spec = s;
    data.seed = seed;
    data.X.resize(n, dims.n_in);
    data.C.resize(n, dims.n_concepts);
    data.Y.resize(n, dims.n_out);

    Eigen::MatrixXd chol = input.chol();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> norm(0.0, 1.0);

    Eigen::MatrixXd task_map, conc_map;
    detail::block_maps(s, truth, task_map, conc_map);

    Eigen::VectorXd z(dims.n_in), c_rec, y_rec;
    for (long l = 0; l < n; ++l) {
        for (long i = 0; i < dims.n_in; ++i) z[i] = norm(rng);
        Eigen::VectorXd x = chol * z;
        data.X.row(l) = x.transpose();
        detail::sample_response(s, task_map * x, conc_map * x, rng, c_rec, y_rec);
        data.C.row(l) = c_rec.transpose();
        data.Y.row(l) = y_rec.transpose();
    }
    return data;
}

double log_density_record(const ModelSpec& s, const ParamPoint& p, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& c, const Eigen::VectorXd& y) {
    Eigen::VectorXd h = p.win * x;
    Eigen::VectorXd task_mean, conc_mean;
    if (s.family == Family::CBM) {
        task_mean = p.wout * h;
        conc_mean = h;
    } else {
        Eigen::VectorXd mu = p.wout * h;
        task_mean = mu.head(s.dims.n_out);
        conc_mean = mu.tail(s.dims.n_concepts);
    }
    double total = detail::block_log_density(s, task_mean, conc_mean, c, y);
    if (!std::isfinite(total)) {
        throw std::runtime_error("non-finite log density (overflow in a response block)");
    }
    return total;
}

double log_likelihood(const ModelSpec& s, const ParamPoint& p, const Dataset& data) {
    validate_spec(s);
    validate_shapes(s, p);
    require(data.X.cols() == s.dims.n_in && data.C.cols() == s.dims.n_concepts &&
                data.Y.cols() == s.dims.n_out,
            "dataset shapes do not match the model dims");
    double total = 0.0;
    for (long l = 0; l < data.n(); ++l) {
        total += log_density_record(s, p, data.X.row(l).transpose(), data.C.row(l).transpose(),
                                    data.Y.row(l).transpose());
    }
    return total;
}

LogLikCache::LogLikCache(const ModelSpec& s, const Dataset& data) : spec_(s), n_(data.n()) {
    validate_spec(s);
    require(data.X.cols() == s.dims.n_in && data.C.cols() == s.dims.n_concepts &&
                data.Y.cols() == s.dims.n_out,
            "dataset shapes do not match the model dims");
    sxx_ = data.X.transpose() * data.X;
    if (task_is_gaussian(s)) {
        task_xt_ = data.Y.transpose() * data.X;
        task_sq_ = data.Y.squaredNorm();
    }
    if (concepts_are_gaussian(s)) {
        conc_xt_ = data.C.transpose() * data.X;
        conc_sq_ = data.C.squaredNorm();
    }
    need_records_ = !task_is_gaussian(s) || !concepts_are_gaussian(s);
    if (need_records_) {
        x_ = data.X;
        c_ = data.C;
        y_ = data.Y;
    }
}

double LogLikCache::eval(const ParamPoint& p) const {
    const ModelDims& dims = spec_.dims;
    if (n_ == 0) return 0.0;

    // Composite input->response maps for the two blocks.
    Eigen::MatrixXd task_map, conc_map;
    if (spec_.family == Family::CBM) {
        conc_map = p.win;
        task_map = p.wout * p.win;
    } else {
        Eigen::MatrixXd full = p.wout * p.win;
        task_map = full.topRows(dims.n_out);
        conc_map = full.bottomRows(dims.n_concepts);
    }

    double total = 0.0;
    if (task_is_gaussian(spec_)) {
        double q = task_sq_ - 2.0 * (task_map.array() * task_xt_.array()).sum() +
                   (task_map * sxx_ * task_map.transpose()).trace();
        total += -0.5 * n_ * dims.n_out * kLog2Pi - 0.5 * q;
    } else {
        Eigen::MatrixXd means = x_ * task_map.transpose();  // n x M
        for (long l = 0; l < n_; ++l) {
            Eigen::VectorXd logits = means.row(l).transpose();
            total += categorical_block_logdens(y_.row(l).transpose(), logits);
        }
    }

    if (dims.n_concepts > 0) {
        if (concepts_are_gaussian(spec_)) {
            double precision = spec_.family == Family::CBM ? dims.gamma : 1.0;
            double q = conc_sq_ - 2.0 * (conc_map.array() * conc_xt_.array()).sum() +
                       (conc_map * sxx_ * conc_map.transpose()).trace();
            total += 0.5 * n_ * dims.n_concepts * (std::log(precision) - kLog2Pi) -
                     0.5 * precision * q;
        } else {
            double scale = concept_logit_scale(spec_);
            Eigen::MatrixXd logits = scale * (x_ * conc_map.transpose());  // n x K
            for (long l = 0; l < n_; ++l) {
                for (long k = 0; k < dims.n_concepts; ++k) {
                    total += detail::log_sigmoid(c_(l, k) == 1.0 ? logits(l, k)
                                                                 : -logits(l, k));
                }
            }
        }
    }
    return total;
}

double LogLikCache::eval_flat(const Eigen::VectorXd& w) const {
    ParamPoint p = unflatten(spec_, w);
    return eval(p);
}

double kl_closed_form(const ModelSpec& s, const ParamPoint& p, const ParamPoint& truth,
                      const Eigen::MatrixXd& second_moment) {
    validate_spec(s);
    validate_shapes(s, p);
    validate_shapes(s, truth);
    require(task_is_gaussian(s) && concepts_are_gaussian(s),
            "kl_closed_form requires Gaussian task and concept kinds");
    InputSpec in = InputSpec::gaussian(second_moment);
    validate_input(in, s.dims.n_in);

    Eigen::MatrixXd dw = p.wout * p.win - truth.wout * truth.win;
    double composite = 0.5 * (dw * second_moment * dw.transpose()).trace();
    if (s.family != Family::CBM) return composite;

    Eigen::MatrixXd db = p.win - truth.win;
    double concept_part = 0.5 * (db * second_moment * db.transpose()).trace();
    return composite + s.dims.gamma * concept_part;
}

McEstimate kl_monte_carlo(const ModelSpec& s, const ParamPoint& p, const ParamPoint& truth,
                          const InputSpec& input, long n_x, long n_resp, std::uint64_t seed) {
    validate_spec(s);
    validate_shapes(s, p);
    validate_shapes(s, truth);
    validate_input(input, s.dims.n_in);
    require(n_x >= 1 && n_resp >= 1, "n_x and n_resp must be >= 1");

    const ModelDims& dims = s.dims;
    bool cbm = s.family == Family::CBM;

    // Composite maps once; the inner response expectation is analytic per x.
    Eigen::MatrixXd task_t, task_m, conc_t, conc_m;
    if (cbm) {
        task_t = truth.wout * truth.win;
        task_m = p.wout * p.win;
        conc_t = truth.win;
        conc_m = p.win;
    } else {
        Eigen::MatrixXd full_t = truth.wout * truth.win;
        Eigen::MatrixXd full_m = p.wout * p.win;
        task_t = full_t.topRows(dims.n_out);
        task_m = full_m.topRows(dims.n_out);
        conc_t = full_t.bottomRows(dims.n_concepts);
        conc_m = full_m.bottomRows(dims.n_concepts);
    }
    double logit_scale = concept_logit_scale(s);

    Eigen::MatrixXd chol = input.chol();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> norm(0.0, 1.0);

    double sum = 0.0, sum_sq = 0.0;
    Eigen::VectorXd z(dims.n_in);
    for (long i = 0; i < n_x; ++i) {
        for (long j = 0; j < dims.n_in; ++j) z[j] = norm(rng);
        Eigen::VectorXd x = chol * z;

        double kl = 0.0;
        Eigen::VectorXd mt = task_t * x;
        Eigen::VectorXd mm = task_m * x;
        if (task_is_gaussian(s)) {
            kl += 0.5 * (mt - mm).squaredNorm();
        } else {
            kl += detail::categorical_kl(mt, mm);
        }
        if (dims.n_concepts > 0) {
            Eigen::VectorXd ht = conc_t * x;
            Eigen::VectorXd hm = conc_m * x;
            if (concepts_are_gaussian(s)) {
                double precision = cbm ? dims.gamma : 1.0;
                kl += 0.5 * precision * (ht - hm).squaredNorm();
            } else {
                for (long k = 0; k < dims.n_concepts; ++k) {
                    kl += detail::bernoulli_kl(logit_scale * ht[k], logit_scale * hm[k]);
                }
            }
        }
        sum += kl;
        sum_sq += kl * kl;
    }

    McEstimate est;
    est.value = sum / n_x;
    if (n_x > 1) {
        double var = (sum_sq - n_x * est.value * est.value) / (n_x - 1);
        est.std_error = std::sqrt(std::max(0.0, var) / n_x);
    }
    return est;
}

double empirical_entropy(const ParamPoint& truth, const Dataset& data) {
    if (data.n() == 0) return 0.0;
    return -log_likelihood(data.spec, truth, data) / static_cast<double>(data.n());
}

}  // namespace slt
