#include "pwacert/relu.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "pwacert/dynamics.hpp"

namespace pwacert::pwa {

Vec ReluNetwork::eval(const Vec& x) const {
  Vec z = W1 * x + b1;
  return W2 * z.cwiseMax(0.0) + b2;
}

Mat ReluNetwork::eval_batch(const Mat& X) const {
  Mat Z = (X * W1.transpose()).rowwise() + b1.transpose();
  Mat H = Z.cwiseMax(0.0);
  return (H * W2.transpose()).rowwise() + b2.transpose();
}

namespace {

struct Box {
  Vec lo, hi;
};

Box bounding_box(const geo::Polytope& domain) {
  auto verts = geo::vertices_of(domain);
  if (verts.empty()) throw std::invalid_argument("fit_surrogate: empty domain");
  Box b{verts[0], verts[0]};
  for (const auto& v : verts) {
    b.lo = b.lo.cwiseMin(v);
    b.hi = b.hi.cwiseMax(v);
  }
  return b;
}

Mat sample_domain(const geo::Polytope& domain, int count, std::mt19937_64& rng) {
  const int n = domain.dim;
  Box box = bounding_box(domain);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Mat X(count, n);
  int have = 0;
  while (have < count) {
    Vec x(n);
    for (int i = 0; i < n; ++i) x(i) = box.lo(i) + unif(rng) * (box.hi(i) - box.lo(i));
    if (domain.contains(x, 0.0)) X.row(have++) = x.transpose();
  }
  return X;
}

// Least-squares refit of the output layer given fixed hidden features; never
// increases the training loss.
void polish_output_layer(ReluNetwork& net, const Mat& X, const Mat& Y) {
  Mat Z = (X * net.W1.transpose()).rowwise() + net.b1.transpose();
  Mat H = Z.cwiseMax(0.0);
  Mat F(H.rows(), H.cols() + 1);
  F << H, Mat::Ones(H.rows(), 1);
  Mat theta = F.colPivHouseholderQr().solve(Y);  // (hidden+1) x n_out
  net.W2 = theta.topRows(H.cols()).transpose();
  net.b2 = theta.bottomRows(1).transpose();
}

double train_mse(const ReluNetwork& net, const Mat& X, const Mat& Y) {
  return (net.eval_batch(X) - Y).squaredNorm() / static_cast<double>(X.rows());
}

ReluNetwork random_init(int width, int n, const geo::Polytope& domain, const Mat& Y,
                        std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  ReluNetwork net;
  net.W1 = Mat(width, n);
  net.b1 = Vec(width);
  net.W2 = Mat(n, width);
  net.b2 = Vec::Zero(n);
  double w1_scale = std::sqrt(2.0 / n);
  for (int i = 0; i < width; ++i)
    for (int d = 0; d < n; ++d) net.W1(i, d) = w1_scale * gauss(rng);
  // kinks pass through random interior points
  Mat anchors = sample_domain(domain, width, rng);
  for (int i = 0; i < width; ++i) net.b1(i) = -net.W1.row(i).dot(anchors.row(i));
  double w2_scale = std::sqrt(1.0 / width);
  for (int d = 0; d < n; ++d)
    for (int i = 0; i < width; ++i) net.W2(d, i) = w2_scale * gauss(rng);
  for (int d = 0; d < n; ++d) net.b2(d) = Y.col(d).mean();
  return net;
}

// One gradient-descent run with momentum and periodic exact refits of the
// linear output layer. Returns the best iterate by training loss.
ReluNetwork train_once(ReluNetwork net, const Mat& X, const Mat& Y, const TrainOptions& opts) {
  const int width = net.hidden_dim();
  const int n = net.input_dim();
  Mat vW1 = Mat::Zero(width, n), vW2 = Mat::Zero(net.output_dim(), width);
  Vec vb1 = Vec::Zero(width), vb2 = Vec::Zero(net.output_dim());
  ReluNetwork best = net;
  double best_loss = std::numeric_limits<double>::infinity();
  const double inv_count = 1.0 / static_cast<double>(X.rows());
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    if (epoch % 500 == 0) {
      ReluNetwork refit = net;
      polish_output_layer(refit, X, Y);
      if (train_mse(refit, X, Y) < train_mse(net, X, Y)) {
        net = refit;
        vW2.setZero();
        vb2.setZero();
      }
    }
    Mat Z = (X * net.W1.transpose()).rowwise() + net.b1.transpose();
    Mat H = Z.cwiseMax(0.0);
    Mat Yhat = (H * net.W2.transpose()).rowwise() + net.b2.transpose();
    Mat E = Yhat - Y;
    double loss = E.squaredNorm() * inv_count;
    if (!std::isfinite(loss)) throw std::runtime_error("training diverged");
    if (loss < best_loss) {
      best_loss = loss;
      best = net;
    }
    Mat dY = 2.0 * inv_count * E;                 // samples x n
    Mat dW2 = dY.transpose() * H;                 // n_out x width
    Vec db2 = dY.colwise().sum().transpose();
    Mat dH = dY * net.W2;                         // samples x width
    Mat mask = (Z.array() > 0.0).cast<double>();
    Mat dZ = dH.cwiseProduct(mask);
    Mat dW1 = dZ.transpose() * X;                 // width x n
    Vec db1 = dZ.colwise().sum().transpose();

    double lr = opts.learning_rate / (1.0 + 5.0 * epoch / std::max(1, opts.epochs));
    vW1 = opts.momentum * vW1 - lr * dW1;
    vb1 = opts.momentum * vb1 - lr * db1;
    vW2 = opts.momentum * vW2 - lr * dW2;
    vb2 = opts.momentum * vb2 - lr * db2;
    net.W1 += vW1;
    net.b1 += vb1;
    net.W2 += vW2;
    net.b2 += vb2;
  }
  if (train_mse(net, X, Y) < best_loss) best = net;
  polish_output_layer(best, X, Y);
  return best;
}

}  // namespace

SurrogateFit fit_surrogate(const dynamics::DynamicsModel& dyn, int width, int samples,
                           std::uint64_t seed, const TrainOptions& opts) {
  if (width < 1) throw std::invalid_argument("fit_surrogate: width must be >= 1");
  if (samples < 10 * width) throw std::invalid_argument("fit_surrogate: need samples >= 10*width");
  const int n = dyn.n;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Mat X = sample_domain(dyn.domain, samples, rng);
  Mat Y(samples, n);
  for (int i = 0; i < samples; ++i) Y.row(i) = dyn.closed_loop(X.row(i).transpose()).transpose();
  Box box = bounding_box(dyn.domain);

  ReluNetwork best;
  double best_loss = std::numeric_limits<double>::infinity();

  // Affine probe: exactly representable closed loops get an exact network
  // (all hidden units active over the domain) and gradient descent is a no-op.
  Mat Xa(samples, n + 1);
  Xa << X, Mat::Ones(samples, 1);
  Mat theta = Xa.colPivHouseholderQr().solve(Y);
  double affine_resid = (Xa * theta - Y).cwiseAbs().maxCoeff();
  if (affine_resid <= 1e-6) {
    ReluNetwork net;
    net.W1 = Mat(width, n);
    for (int i = 0; i < width; ++i) {
      Vec dir = Vec::NullaryExpr(n, [&](int) { return gauss(rng); });
      if (dir.norm() < 1e-6) dir.setOnes();
      net.W1.row(i) = dir.normalized().transpose();
    }
    net.b1 = Vec(width);
    for (int i = 0; i < width; ++i) {
      double reach = 0.0;
      for (int d = 0; d < n; ++d)
        reach += std::abs(net.W1(i, d)) * std::max(std::abs(box.lo(d)), std::abs(box.hi(d)));
      net.b1(i) = reach + 1.0;
    }
    Mat M = theta.topRows(n).transpose();
    Vec c = theta.bottomRows(1).transpose();
    net.W2 = M * net.W1.completeOrthogonalDecomposition().pseudoInverse();
    net.b2 = c - net.W2 * net.b1;
    best = train_once(std::move(net), X, Y, opts);
    best_loss = train_mse(best, X, Y);
  } else {
    for (int r = 0; r < std::max(1, opts.restarts); ++r) {
      ReluNetwork net = train_once(random_init(width, n, dyn.domain, Y, rng), X, Y, opts);
      double loss = train_mse(net, X, Y);
      if (loss < best_loss) {
        best_loss = loss;
        best = net;
      }
    }
  }

  SurrogateFit fit;
  fit.net = best;
  fit.epochs = opts.epochs;
  fit.final_mse = best_loss;

  // Held-out residual on a regular grid clipped to the domain.
  int per_axis = opts.holdout_grid;
  while (std::pow(per_axis, n) > 20000.0 && per_axis > 3) per_axis = (per_axis + 1) / 2;
  std::vector<int> idx(n, 0);
  double max_resid = 0.0;
  while (true) {
    Vec x(n);
    for (int d = 0; d < n; ++d)
      x(d) = box.lo(d) + (box.hi(d) - box.lo(d)) * idx[d] / double(per_axis - 1);
    if (dyn.domain.contains(x, 0.0))
      max_resid = std::max(max_resid, (best.eval(x) - dyn.closed_loop(x)).lpNorm<Eigen::Infinity>());
    int d = 0;
    while (d < n && ++idx[d] == per_axis) idx[d++] = 0;
    if (d == n) break;
  }
  fit.holdout_max_residual = max_resid;
  return fit;
}

}  // namespace pwacert::pwa
