#include "tokd/eval/pca.hpp"

#include <Eigen/Eigenvalues>
#include <cstdio>
#include <fstream>

#include "tokd/datapipe/image_io.hpp"
#include "tokd/numeric/errors.hpp"
#include "tokd/tokenizer/patch.hpp"

namespace tokd {

namespace {

Eigen::MatrixXd as_matrix(const Tensor<double>& t) {
  if (t.rank() != 2) throw DimensionError("pca: expected a token matrix, got " + shape_string(t.shape()));
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(t.data(), t.dim(0),
                                                                                                    t.dim(1));
}

/// Token colours laid out as an image: `views` grids side by side.
Image token_image(const Eigen::MatrixXd& colours, std::size_t first, std::size_t views, const ModelConfig& cfg) {
  const std::size_t p = cfg.patch, gr = cfg.image_height / p, gc = cfg.image_width / p;
  Image img(cfg.image_height, cfg.image_width * views, 3);
  for (std::size_t v = 0; v < views; ++v)
    for (std::size_t r = 0; r < gr; ++r)
      for (std::size_t c = 0; c < gc; ++c) {
        const std::size_t tok = first + (v * gr + r) * gc + c;
        for (std::size_t y = 0; y < p; ++y)
          for (std::size_t x = 0; x < p; ++x)
            for (std::size_t ch = 0; ch < 3; ++ch)
              img.at(r * p + y, v * cfg.image_width + c * p + x, ch) = colours(static_cast<Eigen::Index>(tok), ch);
      }
  return img;
}

}  // namespace

PcaFit pca_fit(const Tensor<double>& tokens, std::size_t k) {
  const Eigen::MatrixXd x = as_matrix(tokens);
  const auto n = x.rows(), d = x.cols();
  if (n < 3) throw ArgumentError("pca: need at least 3 tokens, got " + std::to_string(n));
  if (k == 0 || static_cast<Eigen::Index>(k) > d) throw ArgumentError("pca: component count out of range");
  PcaFit fit;
  fit.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - fit.mean.transpose();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericError("pca: eigendecomposition failed");
  const auto kk = static_cast<Eigen::Index>(k);
  // Eigen sorts ascending; take the trailing columns in reverse.
  fit.components = eig.eigenvectors().rightCols(kk).rowwise().reverse();
  fit.explained = eig.eigenvalues().tail(kk).reverse().cwiseMax(0.0);
  // Fix signs so the largest-magnitude loading of each component is positive.
  for (Eigen::Index j = 0; j < kk; ++j) {
    Eigen::Index arg = 0;
    fit.components.col(j).cwiseAbs().maxCoeff(&arg);
    if (fit.components(arg, j) < 0) fit.components.col(j) *= -1.0;
  }
  fit.projections = centered * fit.components;
  return fit;
}

double source_target_cosine(const Tensor<double>& tokens, std::span<const std::uint8_t> delta) {
  const Eigen::MatrixXd x = as_matrix(tokens);
  if (static_cast<std::size_t>(x.rows()) != delta.size()) throw DimensionError("cosine: role count mismatch");
  Eigen::VectorXd src = Eigen::VectorXd::Zero(x.cols()), tgt = Eigen::VectorXd::Zero(x.cols());
  std::size_t ns = 0, nt = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (delta[i] == kSourceRole) {
      src += x.row(i).transpose();
      ++ns;
    } else {
      tgt += x.row(i).transpose();
      ++nt;
    }
  }
  if (ns == 0 || nt == 0) throw ArgumentError("cosine: need both source and target tokens");
  src /= static_cast<double>(ns);
  tgt /= static_cast<double>(nt);
  const double denom = src.norm() * tgt.norm();
  return denom == 0.0 ? 0.0 : src.dot(tgt) / denom;
}

PcaDump pca_dump(const FeatureCapture<double>& features, const ModelConfig& cfg, const std::filesystem::path& out_dir) {
  PcaDump dump;
  const std::size_t per_view = cfg.tokens_per_view();
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
  for (std::size_t l = 0; l < features.layers.size(); ++l) {
    const Tensor<double>& tokens = features.layers[l];
    dump.cosine.push_back(source_target_cosine(tokens, features.delta));
    const PcaFit fit = pca_fit(tokens, 3);
    Eigen::MatrixXd colours = fit.projections;
    for (Eigen::Index c = 0; c < colours.cols(); ++c) {
      const double lo = colours.col(c).minCoeff(), hi = colours.col(c).maxCoeff();
      if (hi > lo) {
        colours.col(c) = (colours.col(c).array() - lo) / (hi - lo);
      } else {
        colours.col(c).setConstant(0.5);
      }
    }
    const std::size_t n_src = tokens.dim(0) - per_view;
    dump.source_images.push_back(token_image(colours, 0, n_src / per_view, cfg));
    dump.target_images.push_back(token_image(colours, n_src, 1, cfg));
    if (!out_dir.empty()) {
      write_ppm(out_dir / ("layer_" + std::to_string(l) + "_src.ppm"), dump.source_images.back());
      write_ppm(out_dir / ("layer_" + std::to_string(l) + "_tgt.ppm"), dump.target_images.back());
    }
  }
  if (!out_dir.empty()) {
    std::ofstream os(out_dir / "cosine.csv");
    if (!os) throw IoError("cannot write " + (out_dir / "cosine.csv").string());
    os << "layer,cosine\n";
    char buf[64];
    for (std::size_t l = 0; l < dump.cosine.size(); ++l) {
      std::snprintf(buf, sizeof buf, "%zu,%.9f\n", l, dump.cosine[l]);
      os << buf;
    }
  }
  return dump;
}

}  // namespace tokd
