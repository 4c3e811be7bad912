#pragma once

// Marginal moment model: ragged longitudinal data, canonical GLM families, and
// the quasi-likelihood with its score on full data or on a within-cluster
// resample.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pqlwcr/common.hpp"

namespace pqlwcr {

// Clusters of (response, covariate row) observations stored flat, row-major,
// with per-cluster offsets. Immutable after construction.
class Dataset {
 public:
  Dataset(std::size_t p, std::vector<std::size_t> cluster_sizes, Vector responses,
          Vector covariates);

  std::size_t num_clusters() const { return sizes_.size(); }
  std::size_t dim() const { return p_; }
  std::size_t num_obs() const { return y_.size(); }

  std::size_t cluster_size(std::size_t i) const { return sizes_[i]; }
  // Flat index of the first observation of cluster i.
  std::size_t offset(std::size_t i) const { return offsets_[i]; }
  std::span<const std::size_t> cluster_sizes() const { return sizes_; }

  double response(std::size_t obs) const { return y_[obs]; }
  std::span<const double> row(std::size_t obs) const {
    return {x_.data() + obs * p_, p_};
  }
  std::span<const double> responses() const { return y_; }
  std::span<const double> covariates() const { return x_; }

 private:
  std::size_t p_;
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  Vector y_;
  Vector x_;
};

enum class FamilyKind { GaussianIdentity, BinomialLogit };

// Canonical link/variance pair with dispersion fixed at 1.
struct ModelFamily {
  FamilyKind kind = FamilyKind::GaussianIdentity;

  static constexpr ModelFamily gaussian() { return {FamilyKind::GaussianIdentity}; }
  static constexpr ModelFamily binomial() { return {FamilyKind::BinomialLogit}; }
  static constexpr double dispersion() { return 1.0; }

  friend bool operator==(ModelFamily, ModelFamily) = default;
};

// Logit linear predictors are clamped to this magnitude before exponentiation.
inline constexpr double kEtaClamp = 30.0;

double mean_link(ModelFamily family, double eta);
double mean_link_derivative(ModelFamily family, double eta);
double variance_fn(ModelFamily family, double mu);

// Q(y, eta) = integral from mu(eta) to y of (s - y) / g(s) ds, closed form.
double quasi_loglik_obs(ModelFamily family, double y, double eta);

// One chosen observation per cluster; z[i] is a 0-based index into cluster i.
struct ResampleIndex {
  std::vector<std::uint32_t> z;
};

// Read-only selection over a Dataset: all observations, or one per cluster.
// Holds non-owning references; the dataset and resample must outlive it.
class DatasetView {
 public:
  static DatasetView full(const Dataset& data);
  static DatasetView resampled(const Dataset& data, const ResampleIndex& index);

  const Dataset& base() const { return *data_; }
  bool is_resampled() const { return z_ != nullptr; }
  std::size_t num_clusters() const { return data_->num_clusters(); }
  std::size_t num_visible() const;

  // Calls f(obs) for each visible flat observation index, cluster by cluster.
  template <class F>
  void for_each_visible(F&& f) const {
    const std::size_t n = data_->num_clusters();
    if (z_ != nullptr) {
      for (std::size_t i = 0; i < n; ++i) f(data_->offset(i) + (*z_)[i]);
    } else {
      for (std::size_t obs = 0, m = data_->num_obs(); obs < m; ++obs) f(obs);
    }
  }

 private:
  DatasetView(const Dataset* data, const std::vector<std::uint32_t>* z)
      : data_(data), z_(z) {}

  const Dataset* data_;
  const std::vector<std::uint32_t>* z_;
};

// n^{-1} sum over visible observations of Q(Y, X'beta), n = number of clusters.
double quasi_loglik(const DatasetView& view, std::span<const double> beta,
                    ModelFamily family);

// Gradient of quasi_loglik: n^{-1} sum X (Y - mu(X'beta)).
Vector quasi_score(const DatasetView& view, std::span<const double> beta,
                   ModelFamily family);

// Working-independence GEE score over all observations,
// n^{-1} sum_i sum_j X mu'(eta) g(mu)^{-1} (Y - mu). Bias diagnostic only.
Vector full_gee_score(const Dataset& data, std::span<const double> beta,
                      ModelFamily family);

}  // namespace pqlwcr
