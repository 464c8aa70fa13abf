#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "slt/rational.hpp"

namespace slt {

enum class Family { CBM, Multitask, Standard };

std::string family_name(Family f);
std::optional<Family> family_from_name(std::string_view name);

// Which branch of the piecewise threshold formula applied. Regular is the
// bottleneck model (identifiable); the MT_* tags are the four cases of the
// reduced-rank formula, case 1 split by parity.
enum class CaseTag { Regular, MT_Case1a, MT_Case1b, MT_Case2, MT_Case3, MT_Case4 };

std::string case_name(CaseTag c);

enum class TaskKind { RealGaussian, Categorical };
enum class ConceptKind { RealGaussian, BernoulliMulti };

struct ResponseKinds {
    TaskKind task = TaskKind::RealGaussian;
    ConceptKind concepts = ConceptKind::RealGaussian;
};

// Architecture plus truth-rank description.
//   n_in       N, input dimension           (>= 1)
//   n_concepts K, number of concepts        (>= 0; 0 only for Standard)
//   n_out      M, output dimension          (>= 1)
//   hidden     H, intermediate units        (multitask/standard only, >= 1)
//   true_rank  H0, rank of the true input->response map (multitask/standard only)
//   gamma      concept-channel weight in the bottleneck likelihood (> 0)
struct ModelDims {
    int n_in = 1;
    int n_concepts = 0;
    int n_out = 1;
    int hidden = 1;
    int true_rank = 0;
    double gamma = 1.0;
};

// Throw std::invalid_argument when the dims violate the named model's
// preconditions. The multitask check enforces the rank bound
// true_rank <= min(hidden, n_in, n_out + n_concepts).
void validate_cbm_dims(const ModelDims& d);
void validate_multitask_dims(const ModelDims& d);

struct RlctResult {
    Rat lambda;
    int multiplicity = 1;
    CaseTag case_tag = CaseTag::Regular;
};

// lambda = (M+N)K/2, multiplicity 1; independent of gamma and hidden.
RlctResult rlct_cbm(const ModelDims& d);

// Piecewise formula with output block M+K; K = 0 reduces to rlct_standard.
RlctResult rlct_multitask(const ModelDims& d);

// Convenience form taking the classical argument order.
RlctResult rlct_standard(int n_in, int hidden, int n_out, int true_rank);

// Case selector for rlct_multitask, exposed for reuse and tests.
CaseTag multitask_case(const ModelDims& d);

// Categorical task substitutes M-1 for M; concept kind never changes lambda.
RlctResult rlct_cbm_typed(const ModelDims& d, ResponseKinds kinds);
RlctResult rlct_multitask_typed(const ModelDims& d, ResponseKinds kinds);

// Mixed real/categorical outputs and concepts, all four block sizes >= 1.
struct ComposedDims {
    int n_in = 1;
    int m_real = 1;
    int m_cat = 1;
    int k_real = 1;
    int k_cat = 1;
};

RlctResult rlct_cbm_composed(const ComposedDims& c);
RlctResult rlct_multitask_composed(const ComposedDims& c, int hidden, int true_rank);

struct ComparisonVerdict {
    enum class Relation { CbmGreater, CbmLeqMultitask };
    Relation relation;
    CaseTag case_tag;  // case of the multitask evaluation
    Rat lambda_cbm;
    Rat lambda_multitask;
};

std::string relation_name(ComparisonVerdict::Relation r);

// Evaluates the case-wise integer inequalities for sign(lambda_cbm -
// lambda_multitask) and independently compares the exact rationals; a
// disagreement between the two routes throws std::logic_error.
ComparisonVerdict compare_models(const ModelDims& d);

// lambda/n - (m-1)/(n log n); requires n >= 3.
double expected_generalization_error(const RlctResult& r, long n);

// lambda*log n - (m-1)*log log n; requires n > 1 (real-valued n).
double free_energy_penalty(const RlctResult& r, double n);

}  // namespace slt
