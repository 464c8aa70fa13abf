#include "slt/rlct.hpp"

#include <cmath>
#include <stdexcept>

namespace slt {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

void validate_common(const ModelDims& d) {
    require(d.n_in >= 1, "n_in must be >= 1");
    require(d.n_out >= 1, "n_out must be >= 1");
    require(d.n_concepts >= 0, "n_concepts must be >= 0");
    require(d.hidden >= 1, "hidden must be >= 1");
    require(d.gamma > 0.0, "gamma must be > 0");
}

// Theorem-2 style case split for input dim N, combined output dim Mp,
// hidden H and true rank H0. Boundaries belong to case 1 (<= there,
// strict < in cases 2-4).
CaseTag case_for(long N, long Mp, long H, long H0) {
    if (Mp + H0 <= N + H && N + H0 <= Mp + H && H + H0 <= N + Mp) {
        return (N + Mp + H + H0) % 2 == 0 ? CaseTag::MT_Case1a : CaseTag::MT_Case1b;
    }
    if (N + H < Mp + H0) return CaseTag::MT_Case2;
    if (Mp + H < N + H0) return CaseTag::MT_Case3;
    return CaseTag::MT_Case4;
}

RlctResult reduced_rank_rlct(long N, long Mp, long H, long H0) {
    switch (case_for(N, Mp, H, H0)) {
        case CaseTag::MT_Case1a: {
            long base = 2 * (H + H0) * (N + Mp) - (N - Mp) * (N - Mp) - (H + H0) * (H + H0);
            return {Rat(base, 8), 1, CaseTag::MT_Case1a};
        }
        case CaseTag::MT_Case1b: {
            long base = 2 * (H + H0) * (N + Mp) - (N - Mp) * (N - Mp) - (H + H0) * (H + H0) + 1;
            return {Rat(base, 8), 2, CaseTag::MT_Case1b};
        }
        case CaseTag::MT_Case2:
            return {Rat(H * N + H0 * (Mp - H), 2), 1, CaseTag::MT_Case2};
        case CaseTag::MT_Case3:
            return {Rat(H * Mp + H0 * (N - H), 2), 1, CaseTag::MT_Case3};
        default:
            return {Rat(N * Mp, 2), 1, CaseTag::MT_Case4};
    }
}

}  // namespace

std::string family_name(Family f) {
    switch (f) {
        case Family::CBM: return "cbm";
        case Family::Multitask: return "multitask";
        default: return "standard";
    }
}

std::optional<Family> family_from_name(std::string_view name) {
    if (name == "cbm") return Family::CBM;
    if (name == "multitask") return Family::Multitask;
    if (name == "standard") return Family::Standard;
    return std::nullopt;
}

std::string case_name(CaseTag c) {
    switch (c) {
        case CaseTag::Regular: return "Regular";
        case CaseTag::MT_Case1a: return "MT_Case1a";
        case CaseTag::MT_Case1b: return "MT_Case1b";
        case CaseTag::MT_Case2: return "MT_Case2";
        case CaseTag::MT_Case3: return "MT_Case3";
        default: return "MT_Case4";
    }
}

void validate_cbm_dims(const ModelDims& d) {
    validate_common(d);
    require(d.n_concepts >= 1, "n_concepts must be >= 1 for the bottleneck model");
}

void validate_multitask_dims(const ModelDims& d) {
    validate_common(d);
    require(d.true_rank >= 0, "true_rank must be >= 0");
    int bound = std::min({d.hidden, d.n_in, d.n_out + d.n_concepts});
    require(d.true_rank <= bound,
            "true_rank must satisfy true_rank <= min(hidden, n_in, n_out + n_concepts)");
}

RlctResult rlct_cbm(const ModelDims& d) {
    validate_cbm_dims(d);
    long lam_num = static_cast<long>(d.n_out + d.n_in) * d.n_concepts;
    return {Rat(lam_num, 2), 1, CaseTag::Regular};
}

RlctResult rlct_multitask(const ModelDims& d) {
    validate_multitask_dims(d);
    return reduced_rank_rlct(d.n_in, d.n_out + d.n_concepts, d.hidden, d.true_rank);
}

RlctResult rlct_standard(int n_in, int hidden, int n_out, int true_rank) {
    ModelDims d;
    d.n_in = n_in;
    d.hidden = hidden;
    d.n_out = n_out;
    d.n_concepts = 0;
    d.true_rank = true_rank;
    return rlct_multitask(d);
}

CaseTag multitask_case(const ModelDims& d) {
    validate_multitask_dims(d);
    return case_for(d.n_in, d.n_out + d.n_concepts, d.hidden, d.true_rank);
}

RlctResult rlct_cbm_typed(const ModelDims& d, ResponseKinds kinds) {
    validate_cbm_dims(d);
    if (kinds.task == TaskKind::Categorical) {
        require(d.n_out >= 2, "categorical task requires n_out >= 2");
        long lam_num = static_cast<long>(d.n_out + d.n_in - 1) * d.n_concepts;
        return {Rat(lam_num, 2), 1, CaseTag::Regular};
    }
    return rlct_cbm(d);
}

RlctResult rlct_multitask_typed(const ModelDims& d, ResponseKinds kinds) {
    if (kinds.task == TaskKind::Categorical) {
        require(d.n_out >= 2, "categorical task requires n_out >= 2");
        ModelDims sub = d;
        sub.n_out = d.n_out - 1;  // rank check runs against the substituted output dim
        return rlct_multitask(sub);
    }
    return rlct_multitask(d);
}

RlctResult rlct_cbm_composed(const ComposedDims& c) {
    require(c.m_real >= 1 && c.m_cat >= 1 && c.k_real >= 1 && c.k_cat >= 1,
            "composed blocks m_real, m_cat, k_real, k_cat must all be >= 1");
    require(c.n_in >= 1, "n_in must be >= 1");
    long lam_num =
        static_cast<long>(c.m_real + c.m_cat + c.n_in - 1) * (c.k_real + c.k_cat);
    return {Rat(lam_num, 2), 1, CaseTag::Regular};
}

RlctResult rlct_multitask_composed(const ComposedDims& c, int hidden, int true_rank) {
    require(c.m_real >= 1 && c.m_cat >= 1 && c.k_real >= 1 && c.k_cat >= 1,
            "composed blocks m_real, m_cat, k_real, k_cat must all be >= 1");
    ModelDims d;
    d.n_in = c.n_in;
    d.n_out = c.m_real + c.m_cat;
    d.n_concepts = c.k_real + c.k_cat;
    d.hidden = hidden;
    d.true_rank = true_rank;
    ResponseKinds kinds;
    kinds.task = TaskKind::Categorical;
    return rlct_multitask_typed(d, kinds);
}

std::string relation_name(ComparisonVerdict::Relation r) {
    return r == ComparisonVerdict::Relation::CbmGreater ? "CbmGreater" : "CbmLeqMultitask";
}

ComparisonVerdict compare_models(const ModelDims& d) {
    validate_cbm_dims(d);
    RlctResult mt = rlct_multitask(d);
    RlctResult cbm = rlct_cbm(d);

    // Case-wise route: exact integer inequalities equivalent to
    // lambda_cbm > lambda_multitask within each case. In case 1,
    // 8*(lambda_cbm - lambda_multitask) = s^2 + 4M(K - N) with
    // s = K+M+N-H-H0 (and one less in the odd-parity case).
    long N = d.n_in, M = d.n_out, K = d.n_concepts, H = d.hidden, H0 = d.true_rank;
    bool casewise;
    switch (mt.case_tag) {
        case CaseTag::MT_Case1a: {
            long s = K + M + N - H - H0;
            casewise = s * s + 4 * M * (K - N) > 0;
            break;
        }
        case CaseTag::MT_Case1b: {
            long s = K + M + N - H - H0;
            casewise = s * s + 4 * M * (K - N) > 1;
            break;
        }
        case CaseTag::MT_Case2:
            casewise = (M + N - H0) * K > H * (N - H0) + M * H0;
            break;
        case CaseTag::MT_Case3:
            casewise = (M + N - H) * K > H0 * (N - H) + M * H;
            break;
        default:
            casewise = K > N;
            break;
    }

    bool direct = cbm.lambda > mt.lambda;
    if (casewise != direct) {
        throw std::logic_error(
            "comparison routes disagree (case-wise inequality vs exact rational) for dims "
            "N=" + std::to_string(N) + " M=" + std::to_string(M) + " K=" + std::to_string(K) +
            " H=" + std::to_string(H) + " H0=" + std::to_string(H0));
    }

    ComparisonVerdict v;
    v.relation = direct ? ComparisonVerdict::Relation::CbmGreater
                        : ComparisonVerdict::Relation::CbmLeqMultitask;
    v.case_tag = mt.case_tag;
    v.lambda_cbm = cbm.lambda;
    v.lambda_multitask = mt.lambda;
    return v;
}

double expected_generalization_error(const RlctResult& r, long n) {
    if (n < 3) throw std::invalid_argument("n must be >= 3 so that log n > 1");
    double nn = static_cast<double>(n);
    return to_double(r.lambda) / nn - (r.multiplicity - 1) / (nn * std::log(nn));
}

double free_energy_penalty(const RlctResult& r, double n) {
    if (!(n > 1.0)) throw std::invalid_argument("n must be > 1 so that log n > 0");
    return to_double(r.lambda) * std::log(n) - (r.multiplicity - 1) * std::log(std::log(n));
}

}  // namespace slt
