#include "pqlwcr/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "pqlwcr/kernels.hpp"

namespace pqlwcr {

Dataset::Dataset(std::size_t p, std::vector<std::size_t> cluster_sizes, Vector responses,
                 Vector covariates)
    : p_(p), sizes_(std::move(cluster_sizes)), y_(std::move(responses)),
      x_(std::move(covariates)) {
  if (sizes_.empty()) throw std::invalid_argument("dataset needs at least one cluster");
  if (p_ == 0) throw std::invalid_argument("covariate dimension must be positive");
  offsets_.resize(sizes_.size() + 1, 0);
  for (std::size_t i = 0; i < sizes_.size(); ++i) {
    if (sizes_[i] == 0) {
      throw std::invalid_argument("cluster " + std::to_string(i) + " is empty");
    }
    offsets_[i + 1] = offsets_[i] + sizes_[i];
  }
  if (y_.size() != offsets_.back()) {
    throw std::invalid_argument("response count does not match cluster sizes");
  }
  if (x_.size() != y_.size() * p_) {
    throw std::invalid_argument("covariate block must hold one row of length p per response");
  }
}

namespace {

double clamp_eta(double eta) { return std::clamp(eta, -kEtaClamp, kEtaClamp); }

// log(1 + e^eta) without overflow.
double softplus(double eta) {
  return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

void check_dim(const Dataset& data, std::span<const double> beta) {
  if (beta.size() != data.dim()) {
    throw std::invalid_argument("coefficient length " + std::to_string(beta.size()) +
                                " does not match covariate dimension " +
                                std::to_string(data.dim()));
  }
}

}  // namespace

double mean_link(ModelFamily family, double eta) {
  if (!std::isfinite(eta)) throw std::domain_error("mean_link: non-finite linear predictor");
  switch (family.kind) {
    case FamilyKind::GaussianIdentity:
      return eta;
    case FamilyKind::BinomialLogit: {
      const double e = clamp_eta(eta);
      return 1.0 / (1.0 + std::exp(-e));
    }
  }
  return eta;
}

double mean_link_derivative(ModelFamily family, double eta) {
  if (family.kind == FamilyKind::GaussianIdentity) return 1.0;
  const double mu = mean_link(family, eta);
  return mu * (1.0 - mu);
}

double variance_fn(ModelFamily family, double mu) {
  if (family.kind == FamilyKind::GaussianIdentity) return 1.0;
  if (!(mu > 0.0 && mu < 1.0)) {
    throw std::domain_error("variance_fn: binomial mean must lie in (0, 1)");
  }
  return mu * (1.0 - mu);
}

double quasi_loglik_obs(ModelFamily family, double y, double eta) {
  if (family.kind == FamilyKind::GaussianIdentity) {
    const double r = y - eta;
    return -0.5 * r * r;
  }
  return y * eta - softplus(eta);
}

DatasetView DatasetView::full(const Dataset& data) { return DatasetView(&data, nullptr); }

DatasetView DatasetView::resampled(const Dataset& data, const ResampleIndex& index) {
  if (index.z.size() != data.num_clusters()) {
    throw std::invalid_argument("resample index length does not match cluster count");
  }
  for (std::size_t i = 0; i < index.z.size(); ++i) {
    if (index.z[i] >= data.cluster_size(i)) {
      throw std::out_of_range("resample index outside cluster " + std::to_string(i));
    }
  }
  return DatasetView(&data, &index.z);
}

std::size_t DatasetView::num_visible() const {
  return z_ != nullptr ? data_->num_clusters() : data_->num_obs();
}

double quasi_loglik(const DatasetView& view, std::span<const double> beta,
                    ModelFamily family) {
  const Dataset& data = view.base();
  check_dim(data, beta);
  double total = 0.0;
  view.for_each_visible([&](std::size_t obs) {
    const double eta = kernels::dot(data.row(obs), beta);
    total += quasi_loglik_obs(family, data.response(obs), eta);
  });
  return total / static_cast<double>(view.num_clusters());
}

Vector quasi_score(const DatasetView& view, std::span<const double> beta,
                   ModelFamily family) {
  const Dataset& data = view.base();
  check_dim(data, beta);
  Vector score(data.dim(), 0.0);
  view.for_each_visible([&](std::size_t obs) {
    const auto x = data.row(obs);
    const double resid = data.response(obs) - mean_link(family, kernels::dot(x, beta));
    kernels::axpy(resid, x, score);
  });
  const double inv_n = 1.0 / static_cast<double>(view.num_clusters());
  for (double& s : score) s *= inv_n;
  return score;
}

Vector full_gee_score(const Dataset& data, std::span<const double> beta,
                      ModelFamily family) {
  check_dim(data, beta);
  Vector score(data.dim(), 0.0);
  for (std::size_t obs = 0; obs < data.num_obs(); ++obs) {
    const auto x = data.row(obs);
    const double eta = kernels::dot(x, beta);
    const double mu = mean_link(family, eta);
    const double weight = mean_link_derivative(family, eta) / variance_fn(family, mu);
    kernels::axpy(weight * (data.response(obs) - mu), x, score);
  }
  const double inv_n = 1.0 / static_cast<double>(data.num_clusters());
  for (double& s : score) s *= inv_n;
  return score;
}

}  // namespace pqlwcr
