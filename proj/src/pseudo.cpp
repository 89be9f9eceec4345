#include "cate/pseudo.hpp"

#include <cmath>
#include <ostream>

#include "cate/error.hpp"

namespace cate {

const char* pseudo_variant_name(PseudoVariant v) {
  switch (v) {
    case PseudoVariant::Aipw: return "aipw";
    case PseudoVariant::Ipw: return "ipw";
    case PseudoVariant::TrialOnly: return "trial_only";
  }
  return "unknown";
}

namespace {

void check_sizes(const CohortDataset& ds, const NuisancePredictions& np) {
  if (np.p_hat.size() != ds.n_rows() || np.e1_hat.size() != ds.n_rows() ||
      np.g1_hat.size() != ds.n_rows() || np.g0_hat.size() != ds.n_rows())
    throw Error(ErrorKind::Data, "nuisance predictions do not cover every row");
}

}  // namespace

PseudoOutcomes aipw_pseudo(const CohortDataset& ds, const NuisancePredictions& np) {
  check_sizes(ds, np);
  PseudoOutcomes po;
  po.variant = PseudoVariant::Aipw;
  po.from_crossfit = np.crossfit;
  const Eigen::Index n = ds.n_rows();
  po.values.resize(n);
  po.rows.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    po.rows[i] = i;
    double diff = np.g1_hat[i] - np.g0_hat[i];
    if (ds.s[i] == 0.0) {
      po.values[i] = diff;
      continue;
    }
    double e1 = np.e1_hat[i], e0 = 1.0 - np.e1_hat[i];
    double resid = ds.y[i] - np.g_of_a[i];
    po.values[i] = (ds.a[i] - e1) / (np.p_hat[i] * e1 * e0) * resid + diff;
  }
  if (!po.values.allFinite())
    throw Error(ErrorKind::Numeric, "non-finite pseudo-outcome");
  return po;
}

PseudoOutcomes ipw_pseudo(const CohortDataset& ds, const NuisancePredictions& np) {
  check_sizes(ds, np);
  PseudoOutcomes po;
  po.variant = PseudoVariant::Ipw;
  po.from_crossfit = np.crossfit;
  const Eigen::Index n = ds.n_rows();
  po.values.setZero(n);
  po.rows.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    po.rows[i] = i;
    if (ds.s[i] == 0.0) continue;
    double e1 = np.e1_hat[i], e0 = 1.0 - np.e1_hat[i];
    po.values[i] = (ds.a[i] - e1) / (np.p_hat[i] * e1 * e0) * ds.y[i];
  }
  if (!po.values.allFinite())
    throw Error(ErrorKind::Numeric, "non-finite pseudo-outcome");
  return po;
}

PseudoOutcomes trial_pseudo(const CohortDataset& ds, const NuisancePredictions& np) {
  check_sizes(ds, np);
  PseudoOutcomes po;
  po.variant = PseudoVariant::TrialOnly;
  po.from_crossfit = np.crossfit;
  po.rows = ds.trial_rows();
  po.values.resize(po.rows.size());
  for (size_t j = 0; j < po.rows.size(); ++j) {
    Eigen::Index i = po.rows[j];
    double e1 = np.e1_hat[i], e0 = 1.0 - np.e1_hat[i];
    double resid = ds.y[i] - np.g_of_a[i];
    po.values[j] = (ds.a[i] - e1) / (e1 * e0) * resid + np.g1_hat[i] - np.g0_hat[i];
  }
  if (!po.values.allFinite())
    throw Error(ErrorKind::Numeric, "non-finite pseudo-outcome");
  return po;
}

PseudoOutcomes compute_pseudo(PseudoVariant v, const CohortDataset& ds,
                              const NuisancePredictions& np) {
  switch (v) {
    case PseudoVariant::Aipw: return aipw_pseudo(ds, np);
    case PseudoVariant::Ipw: return ipw_pseudo(ds, np);
    case PseudoVariant::TrialOnly: return trial_pseudo(ds, np);
  }
  throw Error(ErrorKind::Config, "unknown pseudo-outcome variant");
}

void dump_pseudo(std::ostream& out, const CohortDataset& ds, const PseudoOutcomes& po) {
  out << "row,s,value,variant\n";
  char buf[64];
  for (size_t j = 0; j < po.rows.size(); ++j) {
    Eigen::Index i = po.rows[j];
    snprintf(buf, sizeof(buf), "%.10g", po.values[j]);
    out << i << ',' << static_cast<int>(ds.s[i]) << ',' << buf << ','
        << pseudo_variant_name(po.variant) << '\n';
  }
}

}  // namespace cate
