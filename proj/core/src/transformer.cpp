#include "gfl/transformer.hpp"

#include <string>

namespace gfl {

namespace {

constexpr double kZeroRowNorm = 1e-15;

void check_layer_shapes(const LayerWeights& w, Eigen::Index h, std::size_t layer) {
  auto square_h = [h](const Matrix& m) { return m.rows() == h && m.cols() == h; };
  if (!square_h(w.value) || !square_h(w.query_key) || !square_h(w.residual)) {
    throw InvalidArgument("layer " + std::to_string(layer) + ": weights must all be " + std::to_string(h) + "x" +
                          std::to_string(h));
  }
}

void require_finite(const Matrix& z, std::size_t layer) {
  if (!z.allFinite()) {
    throw NumericalError("non-finite activations after layer " + std::to_string(layer));
  }
}

void normalize_rows(Matrix& z, int begin, int count) {
  for (int r = begin; r < begin + count; ++r) {
    const double norm = z.row(r).norm();
    if (norm >= kZeroRowNorm) z.row(r) /= norm;
  }
}

void normalize_frobenius(auto&& rows) {
  const double norm = rows.norm();
  if (norm >= kZeroRowNorm) rows /= norm;
}

Matrix step(const Matrix& z, const LayerWeights& w) { return z + attention(z, w) + w.residual * z; }

}  // namespace

std::string_view to_string(Block b) {
  switch (b) {
    case Block::incidence: return "B";
    case Block::lambda: return "Lambda";
    case Block::phi: return "Phi";
    case Block::gamma: return "Gamma";
    case Block::whole: return "Z";
  }
  return "?";
}

BlockLayout BlockLayout::standard(int d, int k) {
  if (d < 0 || k < 1) throw InvalidArgument("standard layout needs d >= 0 and k >= 1");
  return BlockLayout({{Block::incidence, 0, d}, {Block::lambda, d, k}, {Block::phi, d + k, k}});
}

BlockLayout BlockLayout::eigen(int d, int k) {
  if (d < 0 || k < 1) throw InvalidArgument("eigen layout needs d >= 0 and k >= 1");
  return BlockLayout({{Block::incidence, 0, d}, {Block::phi, d, k}});
}

BlockLayout BlockLayout::triple(int n) {
  if (n < 1) throw InvalidArgument("triple layout needs n >= 1");
  return BlockLayout({{Block::gamma, 0, n}, {Block::lambda, n, n}, {Block::phi, 2 * n, n}});
}

BlockLayout BlockLayout::single(int n) {
  if (n < 1) throw InvalidArgument("single layout needs n >= 1");
  return BlockLayout({{Block::whole, 0, n}});
}

BlockLayout BlockLayout::from_blocks(std::vector<BlockRange> blocks) {
  if (blocks.empty()) throw InvalidArgument("layout needs at least one block");
  int next = 0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& r = blocks[i];
    if (r.begin != next || r.size < 0 || (r.size == 0 && r.name != Block::incidence)) {
      throw InvalidArgument("layout block " + std::to_string(i) + " is empty or not contiguous with the previous one");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (blocks[j].name == r.name) throw InvalidArgument("layout repeats block " + std::string(to_string(r.name)));
    }
    next = r.end();
  }
  return BlockLayout(std::move(blocks));
}

int BlockLayout::height() const { return blocks_.empty() ? 0 : blocks_.back().end(); }

bool BlockLayout::has(Block b) const {
  for (const auto& r : blocks_) {
    if (r.name == b) return true;
  }
  return false;
}

const BlockRange& BlockLayout::at(Block b) const {
  for (const auto& r : blocks_) {
    if (r.name == b) return r;
  }
  throw InvalidArgument("layout has no " + std::string(to_string(b)) + " block");
}

Matrix TransformerState::block(Block b) const {
  const auto& r = layout.at(b);
  return z.middleRows(r.begin, r.size);
}

LayerWeights LayerWeights::zeros(int h) { return {Matrix::Zero(h, h), Matrix::Zero(h, h), Matrix::Zero(h, h)}; }

Matrix attention(const Matrix& z, const LayerWeights& w) {
  check_layer_shapes(w, z.rows(), 0);
  const Matrix keys = w.query_key * z;        // h x n
  const Matrix scores = z.transpose() * keys; // n x n
  return w.value * (z * scores);
}

std::vector<TransformerState> forward(const TransformerState& z0, std::span<const LayerWeights> weights,
                                      bool normalize_blocks) {
  if (z0.z.rows() != z0.layout.height()) throw InvalidArgument("forward: state height does not match its layout");
  std::vector<TransformerState> states;
  states.reserve(weights.size() + 1);
  states.push_back(z0);

  const int first = z0.layout.blocks().front().size;
  const int rest = z0.layout.height() - first;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    check_layer_shapes(weights[l], z0.z.rows(), l);
    Matrix next = step(states.back().z, weights[l]);
    if (normalize_blocks) {
      normalize_frobenius(next.topRows(first));
      if (rest > 0) normalize_frobenius(next.bottomRows(rest));
    }
    require_finite(next, l);
    states.push_back({std::move(next), z0.layout});
  }
  return states;
}

std::vector<TransformerState> forward_eig(const TransformerState& z0, std::span<const LayerWeights> weights) {
  if (z0.z.rows() != z0.layout.height()) {
    throw InvalidArgument("forward_eig: state height does not match its layout");
  }
  const auto& phi = z0.layout.at(Block::phi);
  std::vector<TransformerState> states;
  states.reserve(weights.size() + 1);
  states.push_back(z0);
  for (std::size_t l = 0; l < weights.size(); ++l) {
    check_layer_shapes(weights[l], z0.z.rows(), l);
    Matrix next = step(states.back().z, weights[l]);
    normalize_rows(next, phi.begin, phi.size);
    require_finite(next, l);
    states.push_back({std::move(next), z0.layout});
  }
  return states;
}

EfficientLayerWeights EfficientLayerWeights::zeros(int m) {
  EfficientLayerWeights w;
  w.value_phi = Matrix::Zero(m, m);
  w.query_phi = Matrix::Zero(m, m);
  w.key_phi = Matrix::Zero(m, m);
  w.residual_phi = Matrix::Zero(m, m);
  return w;
}

EfficientTrajectory efficient_forward(const Matrix& incidence_t, const Matrix& phi_t,
                                      std::span<const EfficientLayerWeights> weights,
                                      std::optional<BlockRange> normalize_rows_range) {
  if (incidence_t.cols() != phi_t.cols()) {
    throw InvalidArgument("efficient_forward: B^T and Phi^T must have the same number of columns");
  }
  const auto m = phi_t.rows();
  if (normalize_rows_range && (normalize_rows_range->begin < 0 || normalize_rows_range->end() > m)) {
    throw InvalidArgument("efficient_forward: normalisation range outside Phi");
  }

  EfficientTrajectory out;
  out.incidence.reserve(weights.size() + 1);
  out.phi.reserve(weights.size() + 1);
  out.incidence.push_back(incidence_t);
  out.phi.push_back(phi_t);

  for (std::size_t l = 0; l < weights.size(); ++l) {
    const auto& w = weights[l];
    for (const Matrix* blk : {&w.value_phi, &w.query_phi, &w.key_phi, &w.residual_phi}) {
      if (blk->rows() != m || blk->cols() != m) {
        throw InvalidArgument("layer " + std::to_string(l) + ": Phi blocks must be " + std::to_string(m) + "x" +
                              std::to_string(m));
      }
    }
    const Matrix& bt = out.incidence.back();
    const Matrix& pt = out.phi.back();
    const Matrix similarity = (w.alpha_query * w.alpha_key) * (bt.transpose() * bt) +
                              pt.transpose() * ((w.query_phi.transpose() * w.key_phi) * pt);

    Matrix next_b = (1.0 + w.alpha_residual) * bt + w.alpha_value * (bt * similarity);
    Matrix next_phi = pt + w.residual_phi * pt + w.value_phi * (pt * similarity);
    if (normalize_rows_range) normalize_rows(next_phi, normalize_rows_range->begin, normalize_rows_range->size);
    require_finite(next_b, l);
    require_finite(next_phi, l);
    out.incidence.push_back(std::move(next_b));
    out.phi.push_back(std::move(next_phi));
  }
  return out;
}

LayerWeights to_full(const EfficientLayerWeights& w, int d) {
  const int m = w.phi_height();
  LayerWeights full = LayerWeights::zeros(d + m);
  full.value.topLeftCorner(d, d).diagonal().setConstant(w.alpha_value);
  full.value.bottomRightCorner(m, m) = w.value_phi;
  full.query_key.topLeftCorner(d, d).diagonal().setConstant(w.alpha_query * w.alpha_key);
  full.query_key.bottomRightCorner(m, m) = w.query_phi.transpose() * w.key_phi;
  full.residual.topLeftCorner(d, d).diagonal().setConstant(w.alpha_residual);
  full.residual.bottomRightCorner(m, m) = w.residual_phi;
  return full;
}

}  // namespace gfl
