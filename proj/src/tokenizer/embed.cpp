#include "tokd/tokenizer/embed.hpp"

#include <algorithm>

#include "tokd/numeric/errors.hpp"
#include "tokd/numeric/ops.hpp"

namespace tokd {

template <typename T>
std::size_t TokenBatch<T>::source_count() const {
  return static_cast<std::size_t>(std::count(delta.begin(), delta.end(), kSourceRole));
}

template <typename T>
Tensor<T> source_features(const Tensor<T>& image_patches, const Tensor<T>& plucker_patches) {
  if (image_patches.rows() != plucker_patches.rows()) {
    throw DimensionError("embed_source: image patches " + shape_string(image_patches.shape()) +
                         " vs Plücker patches " + shape_string(plucker_patches.shape()));
  }
  const std::size_t n = image_patches.rows(), a = image_patches.cols(), b = plucker_patches.cols();
  Tensor<T> out({n, a + b});
  for (std::size_t r = 0; r < n; ++r) {
    std::copy_n(image_patches.data() + r * a, a, out.data() + r * (a + b));
    std::copy_n(plucker_patches.data() + r * b, b, out.data() + r * (a + b) + a);
  }
  return out;
}

template <typename T>
Var<T> embed_source(Graph<T>& graph, const Tensor<T>& image_patches, const Tensor<T>& plucker_patches,
                    const LinearWeights<T>& w) {
  Var<T> x = graph.constant(source_features(image_patches, plucker_patches));
  return ops::linear(x, w.weight, w.bias);
}

template <typename T>
Var<T> embed_target(Graph<T>& graph, const Tensor<T>& plucker_patches, const LinearWeights<T>& w) {
  return ops::linear(graph.constant(plucker_patches), w.weight, w.bias);
}

template <typename T>
Var<T> detokenize(Var<T> tokens, const LinearWeights<T>& w) {
  return ops::sigmoid(ops::linear(tokens, w.weight, w.bias));
}

template struct TokenBatch<float>;
template struct TokenBatch<double>;
template Tensor<float> source_features(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> source_features(const Tensor<double>&, const Tensor<double>&);
template Var<float> embed_source(Graph<float>&, const Tensor<float>&, const Tensor<float>&, const LinearWeights<float>&);
template Var<double> embed_source(Graph<double>&, const Tensor<double>&, const Tensor<double>&,
                                  const LinearWeights<double>&);
template Var<float> embed_target(Graph<float>&, const Tensor<float>&, const LinearWeights<float>&);
template Var<double> embed_target(Graph<double>&, const Tensor<double>&, const LinearWeights<double>&);
template Var<float> detokenize(Var<float>, const LinearWeights<float>&);
template Var<double> detokenize(Var<double>, const LinearWeights<double>&);

}  // namespace tokd
