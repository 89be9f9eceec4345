#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "cate/dataset.hpp"
#include "cate/error.hpp"

using namespace cate;

namespace {

Schema basic_schema() {
  Schema sc;
  sc.s_col = "s";
  sc.a_col = "a";
  sc.y_col = "y";
  sc.covariate_cols = {"x"};
  sc.modifier_cols = {"x"};
  return sc;
}

const char* kBasicCsv =
    "x,s,a,y\n"
    "0.1,1,1,1\n"
    "0.2,1,0,0\n"
    "0.3,0,,\n"
    "0.4,1,1,0\n"
    "0.5,0,,\n";

}  // namespace

TEST_CASE("loads a small cohort file") {
  std::istringstream in(kBasicCsv);
  CohortDataset ds = load_cohort(in, basic_schema());
  REQUIRE(ds.n_rows() == 5);
  CHECK(ds.n_trial() == 3);
  CHECK(ds.n_trial_arm(1) == 2);
  CHECK(ds.n_trial_arm(0) == 1);
  CHECK(ds.outcome_binary);
  CHECK(ds.dropped_missing == 0);
  CHECK(ds.column("x")[2] == 0.3);
  CHECK(std::isnan(ds.a[2]));
  CHECK(std::isnan(ds.y[4]));
  CHECK(ds.column_index("x") == 0);
  CHECK(ds.column_index("absent") == -1);
  auto tr = ds.trial_rows();
  REQUIRE(tr.size() == 3);
  CHECK(tr[0] == 0);
  CHECK(tr[1] == 1);
  CHECK(tr[2] == 3);
}

TEST_CASE("continuous outcomes flip the binary flag") {
  std::istringstream in(
      "x,s,a,y\n"
      "0.1,1,1,2.5\n"
      "0.2,1,0,-0.3\n"
      "0.3,0,,\n");
  CohortDataset ds = load_cohort(in, basic_schema());
  CHECK_FALSE(ds.outcome_binary);
}

TEST_CASE("rows with missing covariates are dropped and counted") {
  std::istringstream in(
      "x,s,a,y\n"
      "0.1,1,1,1\n"
      ",1,0,0\n"
      "0.3,0,,\n"
      "0.4,1,0,1\n");
  CohortDataset ds = load_cohort(in, basic_schema());
  CHECK(ds.n_rows() == 3);
  CHECK(ds.dropped_missing == 1);
}

TEST_CASE("malformed inputs are rejected") {
  Schema sc = basic_schema();
  SUBCASE("missing column") {
    std::istringstream in("x,s,a\n0.1,1,1\n");
    CHECK_THROWS_AS(load_cohort(in, sc), Error);
  }
  SUBCASE("s outside {0,1}") {
    std::istringstream in("x,s,a,y\n0.1,2,1,1\n0.2,1,0,0\n");
    CHECK_THROWS_AS(load_cohort(in, sc), Error);
  }
  SUBCASE("treatment recorded on a non-trial row") {
    std::istringstream in("x,s,a,y\n0.1,0,1,\n0.2,1,0,0\n");
    CHECK_THROWS_AS(load_cohort(in, sc), Error);
  }
  SUBCASE("outcome recorded on a non-trial row") {
    std::istringstream in("x,s,a,y\n0.1,0,,1\n0.2,1,0,0\n");
    CHECK_THROWS_AS(load_cohort(in, sc), Error);
  }
  SUBCASE("no trial rows") {
    std::istringstream in("x,s,a,y\n0.1,0,,\n0.2,0,,\n");
    CHECK_THROWS_AS(load_cohort(in, sc), Error);
  }
  SUBCASE("no non-trial rows") {
    std::istringstream in("x,s,a,y\n0.1,1,1,1\n0.2,1,0,0\n");
    CHECK_THROWS_AS(load_cohort(in, sc), Error);
  }
  SUBCASE("modifier not among covariates") {
    Schema bad = sc;
    bad.modifier_cols = {"z"};
    std::istringstream in(kBasicCsv);
    CHECK_THROWS_AS(load_cohort(in, bad), Error);
  }
}

TEST_CASE("write then reload round-trips") {
  std::istringstream in(kBasicCsv);
  CohortDataset ds = load_cohort(in, basic_schema());
  std::ostringstream out;
  write_cohort(out, ds);
  std::istringstream back(out.str());
  Schema sc = basic_schema();
  CohortDataset ds2 = load_cohort(back, sc);
  REQUIRE(ds2.n_rows() == ds.n_rows());
  CHECK((ds2.covariates - ds.covariates).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((ds2.s - ds.s).lpNorm<Eigen::Infinity>() == 0.0);
  for (Eigen::Index i = 0; i < ds.n_rows(); ++i) {
    if (ds.s[i] == 1.0) {
      CHECK(ds2.a[i] == ds.a[i]);
      CHECK(ds2.y[i] == ds.y[i]);
    } else {
      CHECK(std::isnan(ds2.a[i]));
    }
  }
}

TEST_CASE("subset keeps row content") {
  std::istringstream in(kBasicCsv);
  CohortDataset ds = load_cohort(in, basic_schema());
  CohortDataset sub = subset(ds, {0, 2, 4});
  REQUIRE(sub.n_rows() == 3);
  CHECK(sub.column("x")[1] == 0.3);
  CHECK(sub.s[0] == 1.0);
  CHECK(sub.s[1] == 0.0);
  CHECK(sub.a[0] == 1.0);
  CHECK(std::isnan(sub.a[2]));
}

TEST_CASE("fold assignment is stratified, balanced, and deterministic") {
  // build a dataset with known cell counts: 40 non-trial, 30 trial arm1,
  // 20 trial arm0
  const int n = 90;
  CohortDataset ds;
  ds.covariates.resize(n, 1);
  ds.columns = {"x"};
  ds.effect_modifier_columns = {"x"};
  ds.s.resize(n);
  ds.a.resize(n);
  ds.y.resize(n);
  double nan = std::nan("");
  for (int i = 0; i < n; ++i) {
    ds.covariates(i, 0) = i * 0.01;
    if (i < 40) {
      ds.s[i] = 0;
      ds.a[i] = nan;
      ds.y[i] = nan;
    } else if (i < 70) {
      ds.s[i] = 1;
      ds.a[i] = 1;
      ds.y[i] = i % 2;
    } else {
      ds.s[i] = 1;
      ds.a[i] = 0;
      ds.y[i] = i % 2;
    }
  }
  ds.validate();

  FoldAssignment f = assign_folds(ds, 2, 42);
  REQUIRE(f.fold_id.size() == static_cast<size_t>(n));
  std::map<std::pair<int, int>, std::map<int, int>> cell_counts;
  for (int i = 0; i < n; ++i) {
    CHECK(f.fold_id[i] >= 1);
    CHECK(f.fold_id[i] <= 2);
    int s = static_cast<int>(ds.s[i]);
    int a = s == 1 ? static_cast<int>(ds.a[i]) : -1;
    cell_counts[{s, a}][f.fold_id[i]]++;
  }
  // each cell splits evenly across folds
  CHECK(cell_counts[{0, -1}][1] == 20);
  CHECK(cell_counts[{0, -1}][2] == 20);
  CHECK(cell_counts[{1, 1}][1] == 15);
  CHECK(cell_counts[{1, 0}][1] == 10);

  FoldAssignment g = assign_folds(ds, 2, 42);
  CHECK(f.fold_id == g.fold_id);
  FoldAssignment h = assign_folds(ds, 2, 43);
  CHECK(f.fold_id != h.fold_id);

  // more folds than trial rows in the small arm
  CHECK_THROWS_AS(assign_folds(ds, 25, 1), Error);
}
