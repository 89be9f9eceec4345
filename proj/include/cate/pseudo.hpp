#ifndef CATE_PSEUDO_HPP
#define CATE_PSEUDO_HPP

#include <Eigen/Dense>
#include <iosfwd>
#include <vector>

#include "cate/dataset.hpp"
#include "cate/nuisance.hpp"

namespace cate {

enum class PseudoVariant { Aipw, Ipw, TrialOnly };

const char* pseudo_variant_name(PseudoVariant v);

// Per-row pseudo-outcomes. For the trial-only variant `values` covers
// only trial rows; `rows` maps each value back to its dataset row.
struct PseudoOutcomes {
  Eigen::VectorXd values;
  std::vector<Eigen::Index> rows;
  PseudoVariant variant = PseudoVariant::Aipw;
  bool from_crossfit = false;
};

// Doubly robust pseudo-outcome: the weighted trial residual plus the
// plug-in arm difference. On s=0 rows only the arm difference remains.
PseudoOutcomes aipw_pseudo(const CohortDataset& ds, const NuisancePredictions& np);

// Weighting-only pseudo-outcome: the AIPW formula with every outcome
// model term set to zero. Exactly 0 on s=0 rows.
PseudoOutcomes ipw_pseudo(const CohortDataset& ds, const NuisancePredictions& np);

// Trial-only pseudo-outcome: no participation weight, trial rows only.
PseudoOutcomes trial_pseudo(const CohortDataset& ds, const NuisancePredictions& np);

PseudoOutcomes compute_pseudo(PseudoVariant v, const CohortDataset& ds,
                              const NuisancePredictions& np);

void dump_pseudo(std::ostream& out, const CohortDataset& ds, const PseudoOutcomes& po);

}  // namespace cate

#endif
