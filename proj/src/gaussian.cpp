#include "knockoff/gaussian.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace knockoff {

namespace {
constexpr int kBlockRows = 8192;

void require_symmetric(const Mat& m, const char* what) {
  if (m.rows() != m.cols()) throw InvalidInputError(std::string(what) + ": not square");
  double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw InvalidInputError(std::string(what) + ": not symmetric");
}
}  // namespace

Vec select_diag_equicorrelated(const Mat& sigma) {
  require_symmetric(sigma, "select_diag_equicorrelated");
  const int p = static_cast<int>(sigma.rows());
  Vec sd = sigma.diagonal().cwiseSqrt();
  if (!(sigma.diagonal().minCoeff() > 0.0))
    throw InvalidInputError("select_diag_equicorrelated: nonpositive variance");
  Mat corr = sd.cwiseInverse().asDiagonal() * sigma * sd.cwiseInverse().asDiagonal();
  Eigen::SelfAdjointEigenSolver<Mat> es(corr);
  double lmin = es.eigenvalues().minCoeff();
  if (!(lmin > 0.0))
    throw InvalidInputError("select_diag_equicorrelated: sigma not positive definite");
  Vec d(p);
  for (int j = 0; j < p; ++j)
    d[j] = std::min(sigma(j, j), 2.0 * lmin * sigma(j, j));
  return d;
}

GaussianModel assemble_joint(const Mat& sigma, const Vec& d) {
  require_symmetric(sigma, "assemble_joint");
  const int p = static_cast<int>(sigma.rows());
  if (d.size() != p) throw InvalidInputError("assemble_joint: d length != p");
  if (d.minCoeff() < 0.0) throw InvalidInputError("assemble_joint: d must be nonnegative");

  GaussianModel model;
  model.p = p;
  model.sigma = sigma;
  model.d = d;
  Mat off = sigma - Mat(d.asDiagonal());
  model.g.resize(2 * p, 2 * p);
  model.g.topLeftCorner(p, p) = sigma;
  model.g.bottomRightCorner(p, p) = sigma;
  model.g.topRightCorner(p, p) = off;
  model.g.bottomLeftCorner(p, p) = off;

  Eigen::SelfAdjointEigenSolver<Mat> es(model.g);
  double lmin = es.eigenvalues().minCoeff();
  double scale = std::max(1.0, model.g.trace() / (2.0 * p));
  if (lmin < -1e-8 * scale) {
    std::ostringstream msg;
    msg << "assemble_joint: G is not positive semidefinite (min eigenvalue "
        << lmin << ")";
    throw ConstructionError(msg.str());
  }
  return model;
}

Mat psd_sqrt(const Mat& cov, double zero_floor) {
  require_symmetric(cov, "psd_sqrt");
  Eigen::SelfAdjointEigenSolver<Mat> es(cov);
  double scale = std::max(1.0, cov.trace() / std::max<Eigen::Index>(cov.rows(), 1));
  Vec vals = es.eigenvalues();
  for (int i = 0; i < vals.size(); ++i) {
    if (vals[i] < -1e-8 * scale)
      throw ConstructionError("psd_sqrt: matrix has a significantly negative eigenvalue");
    vals[i] = (vals[i] <= zero_floor) ? 0.0 : std::sqrt(vals[i]);
  }
  return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().transpose();
}

Mat sample_mvn(const Mat& cov, int n, Engine& eng) {
  Mat root = psd_sqrt(cov);
  const int dim = static_cast<int>(cov.rows());
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat z(n, dim);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < dim; ++j) z(i, j) = gauss(eng);
  return z * root;  // root symmetric
}

Mat sample_joint(const GaussianModel& model, int n, std::uint64_t seed) {
  if (n < 1) throw InvalidInputError("sample_joint: n must be >= 1");
  if (model.g.rows() != 2 * model.p)
    throw InvalidInputError("sample_joint: model not assembled");
  Mat root = psd_sqrt(model.g);
  const int dim = 2 * model.p;
  Mat out(n, dim);
  std::normal_distribution<double> gauss(0.0, 1.0);
  int row = 0;
  std::uint64_t block = 0;
  while (row < n) {
    int take = std::min(kBlockRows, n - row);
    Engine eng = make_engine(seed, block++);
    Mat z(take, dim);
    for (int i = 0; i < take; ++i)
      for (int j = 0; j < dim; ++j) z(i, j) = gauss(eng);
    out.middleRows(row, take).noalias() = z * root;
    row += take;
  }
  return out;
}

GaussianConditionalSampler::GaussianConditionalSampler(const GaussianModel& model)
    : p_(model.p) {
  Eigen::SelfAdjointEigenSolver<Mat> es(model.sigma);
  double lmin = es.eigenvalues().minCoeff();
  double scale = std::max(1.0, model.sigma.trace() / model.p);
  if (lmin <= 1e-12 * scale)
    throw InvalidInputError("conditional sampler: Sigma is singular");
  Mat off = model.sigma - Mat(model.d.asDiagonal());
  a_ = model.sigma.llt().solve(off).transpose();  // (Sigma - D) Sigma^{-1}
  cond_cov_ = model.sigma - a_ * off;
  cond_cov_ = 0.5 * (cond_cov_ + cond_cov_.transpose());
  // rounding noise around exactly degenerate directions (d = 0) is floored
  factor_ = psd_sqrt(cond_cov_, 1e-12 * scale);
}

Vec GaussianConditionalSampler::draw(const Vec& x, Engine& eng) const {
  if (x.size() != p_) throw InvalidInputError("conditional draw: x dim != p");
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec z(p_);
  for (int j = 0; j < p_; ++j) z[j] = gauss(eng);
  return a_ * x + factor_ * z;
}

Vec conditional_knockoff(const GaussianModel& model, const Vec& x,
                         std::uint64_t seed) {
  GaussianConditionalSampler sampler(model);
  Engine eng = make_engine(seed);
  return sampler.draw(x, eng);
}

}  // namespace knockoff
