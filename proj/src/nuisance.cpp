#include "cate/nuisance.hpp"

#include <cmath>
#include <limits>

#include "cate/error.hpp"

namespace cate {

namespace {

Eigen::VectorXd take(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& rows) {
  Eigen::VectorXd out(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) out[i] = v[rows[i]];
  return out;
}

long truncate_probs(Eigen::VectorXd& p, double eps) {
  long clipped = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] < eps) {
      p[i] = eps;
      ++clipped;
    } else if (p[i] > 1.0 - eps) {
      p[i] = 1.0 - eps;
      ++clipped;
    }
  }
  return clipped;
}

GlmFit fit_named(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                 GlmFamily family, const char* which) {
  try {
    return fit_glm(design, response, family);
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(which) + " model: " + e.what());
  }
}

std::vector<Eigen::Index> all_rows(const CohortDataset& ds) {
  std::vector<Eigen::Index> rows(ds.n_rows());
  for (Eigen::Index i = 0; i < ds.n_rows(); ++i) rows[i] = i;
  return rows;
}

}  // namespace

ResolvedModel::ResolvedModel(const ModelSpec& spec, const CohortDataset& ds)
    : terms_(spec.terms) {
  width_ = 1;  // intercept
  resolved_.resize(terms_.size());
  for (size_t t = 0; t < terms_.size(); ++t) {
    const TermSpec& term = terms_[t];
    if (ds.column_index(term.column) < 0)
      throw Error(ErrorKind::Config, "nuisance model references unknown column '" + term.column + "'");
    switch (term.expansion) {
      case TermSpec::Expansion::Raw:
        width_ += 1;
        break;
      case TermSpec::Expansion::BSpline:
        resolved_[t] = resolve_bspline(ds.column(term.column), term.order, term.n_interior);
        // first basis function dropped: the clamped basis sums to one,
        // which collides with the intercept
        width_ += resolved_[t].width() - 1;
        break;
      case TermSpec::Expansion::Polynomial:
        if (term.degree < 1)
          throw Error(ErrorKind::Config, "polynomial expansion needs degree >= 1");
        width_ += term.degree;
        break;
    }
  }
}

Eigen::MatrixXd ResolvedModel::design(const CohortDataset& ds,
                                      const std::vector<Eigen::Index>& rows) const {
  Eigen::MatrixXd m(rows.size(), width_);
  m.col(0).setOnes();
  int col = 1;
  for (size_t t = 0; t < terms_.size(); ++t) {
    const TermSpec& term = terms_[t];
    Eigen::VectorXd x = take(ds.column(term.column), rows);
    switch (term.expansion) {
      case TermSpec::Expansion::Raw:
        m.col(col++) = x;
        break;
      case TermSpec::Expansion::BSpline: {
        const int w = resolved_[t].width();
        for (Eigen::Index i = 0; i < x.size(); ++i) {
          Eigen::VectorXd row = bspline_row(x[i], resolved_[t]);
          for (int j = 1; j < w; ++j) m(i, col + j - 1) = row[j];
        }
        col += w - 1;
        break;
      }
      case TermSpec::Expansion::Polynomial: {
        for (Eigen::Index i = 0; i < x.size(); ++i) {
          double v = 1.0;
          for (int j = 1; j <= term.degree; ++j) {
            v *= x[i];
            m(i, col + j - 1) = v;
          }
        }
        col += term.degree;
        break;
      }
    }
  }
  return m;
}

Eigen::MatrixXd ResolvedModel::design_all(const CohortDataset& ds) const {
  return design(ds, all_rows(ds));
}

namespace {

struct ArmRows {
  std::vector<Eigen::Index> trial, arm1, arm0;
};

ArmRows split_arms(const CohortDataset& ds, const std::vector<Eigen::Index>& rows) {
  ArmRows r;
  for (Eigen::Index i : rows) {
    if (ds.s[i] != 1.0) continue;
    r.trial.push_back(i);
    (ds.a[i] == 1.0 ? r.arm1 : r.arm0).push_back(i);
  }
  return r;
}

// Fit the four models on `train` and fill predictions for `predict` rows.
void fit_and_predict(const CohortDataset& ds, const ResolvedModel& pm,
                     const ResolvedModel& om, const ResolvedModel& tm,
                     const std::vector<Eigen::Index>& train,
                     const std::vector<Eigen::Index>& predict,
                     NuisancePredictions& np) {
  ArmRows arms = split_arms(ds, train);
  if (arms.arm1.empty() || arms.arm0.empty())
    throw Error(ErrorKind::Data, "single-arm trial: both treatment arms are required");

  GlmFamily outcome_family = ds.outcome_binary ? GlmFamily::Logistic : GlmFamily::Linear;

  GlmFit p_fit = fit_named(pm.design(ds, train), take(ds.s, train),
                           GlmFamily::Logistic, "participation");
  GlmFit e_fit = fit_named(tm.design(ds, arms.trial), take(ds.a, arms.trial),
                           GlmFamily::Logistic, "treatment");
  GlmFit g1_fit = fit_named(om.design(ds, arms.arm1), take(ds.y, arms.arm1),
                            outcome_family, "outcome (treated arm)");
  GlmFit g0_fit = fit_named(om.design(ds, arms.arm0), take(ds.y, arms.arm0),
                            outcome_family, "outcome (control arm)");

  Eigen::MatrixXd pd = pm.design(ds, predict);
  Eigen::MatrixXd td = tm.design(ds, predict);
  Eigen::MatrixXd od = om.design(ds, predict);
  Eigen::VectorXd p = p_fit.predict_mean(pd);
  Eigen::VectorXd e1 = e_fit.predict_mean(td);
  Eigen::VectorXd g1 = g1_fit.predict_mean(od);
  Eigen::VectorXd g0 = g0_fit.predict_mean(od);
  for (size_t i = 0; i < predict.size(); ++i) {
    np.p_hat[predict[i]] = p[i];
    np.e1_hat[predict[i]] = e1[i];
    np.g1_hat[predict[i]] = g1[i];
    np.g0_hat[predict[i]] = g0[i];
  }

  auto merge = [](FitDiag& d, const GlmFit& f) {
    d.converged = d.converged && f.converged;
    d.iterations = std::max(d.iterations, f.iterations);
    d.deviance += f.deviance;
  };
  merge(np.p_diag, p_fit);
  merge(np.e_diag, e_fit);
  merge(np.g1_diag, g1_fit);
  merge(np.g0_diag, g0_fit);
}

void finalize(const CohortDataset& ds, NuisancePredictions& np) {
  np.truncation_count += truncate_probs(np.p_hat, kProbTruncation);
  np.truncation_count += truncate_probs(np.e1_hat, kProbTruncation);
  np.g_of_a.setConstant(std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index i = 0; i < ds.n_rows(); ++i)
    if (ds.s[i] == 1.0)
      np.g_of_a[i] = ds.a[i] * np.g1_hat[i] + (1.0 - ds.a[i]) * np.g0_hat[i];
}

NuisancePredictions make_empty(const CohortDataset& ds) {
  NuisancePredictions np;
  const Eigen::Index n = ds.n_rows();
  np.p_hat.resize(n);
  np.e1_hat.resize(n);
  np.g1_hat.resize(n);
  np.g0_hat.resize(n);
  np.g_of_a.resize(n);
  np.p_diag.converged = np.e_diag.converged = true;
  np.g1_diag.converged = np.g0_diag.converged = true;
  return np;
}

}  // namespace

NuisancePredictions fit_nuisances(const CohortDataset& ds,
                                  const ModelSpec& participation_spec,
                                  const ModelSpec& outcome_spec,
                                  const ModelSpec& treatment_spec) {
  ds.validate();
  ResolvedModel pm(participation_spec, ds);
  ResolvedModel om(outcome_spec, ds);
  ResolvedModel tm(treatment_spec, ds);
  NuisancePredictions np = make_empty(ds);
  std::vector<Eigen::Index> rows(ds.n_rows());
  for (Eigen::Index i = 0; i < ds.n_rows(); ++i) rows[i] = i;
  fit_and_predict(ds, pm, om, tm, rows, rows, np);
  finalize(ds, np);
  return np;
}

NuisancePredictions fit_nuisances_crossfit(const CohortDataset& ds,
                                           const FoldAssignment& folds,
                                           const ModelSpec& participation_spec,
                                           const ModelSpec& outcome_spec,
                                           const ModelSpec& treatment_spec) {
  ds.validate();
  if (static_cast<Eigen::Index>(folds.fold_id.size()) != ds.n_rows())
    throw Error(ErrorKind::Data, "fold assignment length does not match dataset");
  for (int f : folds.fold_id)
    if (f < 1 || f > folds.k)
      throw Error(ErrorKind::Data, "fold id outside 1..k");

  // knots are placed from the full dataset so every fold shares one design
  ResolvedModel pm(participation_spec, ds);
  ResolvedModel om(outcome_spec, ds);
  ResolvedModel tm(treatment_spec, ds);
  NuisancePredictions np = make_empty(ds);
  np.crossfit = true;

  for (int fold = 1; fold <= folds.k; ++fold) {
    std::vector<Eigen::Index> train, heldout;
    for (Eigen::Index i = 0; i < ds.n_rows(); ++i)
      (folds.fold_id[i] == fold ? heldout : train).push_back(i);
    if (heldout.empty())
      throw Error(ErrorKind::Data, "empty fold " + std::to_string(fold));
    fit_and_predict(ds, pm, om, tm, train, heldout, np);
  }
  finalize(ds, np);
  return np;
}

}  // namespace cate
