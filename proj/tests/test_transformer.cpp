#include <gtest/gtest.h>

#include <limits>

#include "gfl/transformer.hpp"
#include "support/oracles.hpp"

namespace {

using gfl::Block;
using gfl::BlockLayout;
using gfl::LayerWeights;
using gfl::Matrix;

LayerWeights random_layer(int h, std::uint64_t seed, double scale) {
  return {oracle::random_matrix(h, h, seed, scale), oracle::random_matrix(h, h, seed + 1, scale),
          oracle::random_matrix(h, h, seed + 2, scale)};
}

Matrix naive_layer(const Matrix& z, const LayerWeights& w) {
  using oracle::naive_matmul;
  const Matrix attn = naive_matmul(naive_matmul(naive_matmul(naive_matmul(w.value, z), z.transpose()), w.query_key), z);
  return z + attn + naive_matmul(w.residual, z);
}

TEST(Layout, StandardAndFriends) {
  const auto s = BlockLayout::standard(5, 2);
  EXPECT_EQ(s.height(), 9);
  EXPECT_EQ(s.at(Block::incidence).size, 5);
  EXPECT_EQ(s.at(Block::lambda).begin, 5);
  EXPECT_EQ(s.at(Block::phi).begin, 7);
  EXPECT_FALSE(s.has(Block::gamma));
  EXPECT_THROW(s.at(Block::gamma), gfl::InvalidArgument);

  EXPECT_EQ(BlockLayout::eigen(4, 3).height(), 7);
  EXPECT_EQ(BlockLayout::eigen(4, 3).at(Block::phi).begin, 4);
  EXPECT_EQ(BlockLayout::triple(6).at(Block::phi).begin, 12);
  EXPECT_EQ(BlockLayout::single(3).height(), 3);
  EXPECT_THROW(BlockLayout::standard(3, 0), gfl::InvalidArgument);
}

TEST(Layout, FromBlocksValidates) {
  EXPECT_EQ(BlockLayout::from_blocks({{Block::incidence, 0, 3}, {Block::phi, 3, 2}}), BlockLayout::eigen(3, 2));
  EXPECT_THROW(BlockLayout::from_blocks({}), gfl::InvalidArgument);
  EXPECT_THROW(BlockLayout::from_blocks({{Block::incidence, 0, 3}, {Block::phi, 4, 2}}), gfl::InvalidArgument);
  EXPECT_THROW(BlockLayout::from_blocks({{Block::phi, 0, 3}, {Block::phi, 3, 2}}), gfl::InvalidArgument);
}

TEST(Attention, MatchesLeftToRightProduct) {
  const Matrix z = oracle::random_matrix(6, 4, 1);
  const auto w = random_layer(6, 10, 0.5);
  const Matrix expected = oracle::naive_matmul(
      oracle::naive_matmul(oracle::naive_matmul(oracle::naive_matmul(w.value, z), z.transpose()), w.query_key), z);
  EXPECT_LE((gfl::attention(z, w) - expected).cwiseAbs().maxCoeff(), 1e-12 * expected.cwiseAbs().maxCoeff());
  EXPECT_THROW(gfl::attention(z, LayerWeights::zeros(5)), gfl::InvalidArgument);
}

TEST(Forward, ZeroWeightsAreIdentity) {
  const gfl::TransformerState z0{oracle::random_matrix(5, 3, 2), BlockLayout::single(5)};
  const std::vector<LayerWeights> ws(3, LayerWeights::zeros(5));
  const auto states = gfl::forward(z0, ws);
  ASSERT_EQ(states.size(), 4u);
  for (const auto& s : states) EXPECT_TRUE(s.z.isApprox(z0.z, 0.0));
}

TEST(Forward, MatchesNaiveRecurrence) {
  const gfl::TransformerState z0{oracle::random_matrix(7, 5, 3, 0.5), BlockLayout::eigen(4, 3)};
  std::vector<LayerWeights> ws;
  for (int l = 0; l < 4; ++l) ws.push_back(random_layer(7, 100 + 3 * l, 0.2));
  const auto states = gfl::forward(z0, ws);
  Matrix z = z0.z;
  for (std::size_t l = 0; l < ws.size(); ++l) {
    z = naive_layer(z, ws[l]);
    EXPECT_LE((states[l + 1].z - z).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, z.cwiseAbs().maxCoeff()));
  }
  EXPECT_EQ(states.back().layout, z0.layout);
}

TEST(Forward, BlockNormalisation) {
  const gfl::TransformerState z0{oracle::random_matrix(7, 5, 4), BlockLayout::standard(3, 2)};
  const std::vector<LayerWeights> ws{random_layer(7, 7, 0.3), random_layer(7, 8, 0.3)};
  const auto states = gfl::forward(z0, ws, true);
  for (std::size_t l = 1; l < states.size(); ++l) {
    EXPECT_NEAR(states[l].z.topRows(3).norm(), 1.0, 1e-12);
    EXPECT_NEAR(states[l].z.bottomRows(4).norm(), 1.0, 1e-12);
  }
}

TEST(ForwardEig, NormalisesPhiRowsAndSkipsZeroRows) {
  Matrix z = oracle::random_matrix(5, 4, 6);
  z.row(4).setZero();
  const gfl::TransformerState z0{z, BlockLayout::eigen(2, 3)};
  LayerWeights w = LayerWeights::zeros(5);
  w.residual(2, 2) = 2.0;  // scale one Phi row by 3
  const auto states = gfl::forward_eig(z0, std::vector{w});
  EXPECT_NEAR(states[1].z.row(2).norm(), 1.0, 1e-15);
  EXPECT_NEAR(states[1].z.row(3).norm(), 1.0, 1e-15);
  EXPECT_EQ(states[1].z.row(4).norm(), 0.0);
  EXPECT_TRUE(states[1].z.topRows(2).isApprox(z.topRows(2), 0.0));
  EXPECT_LE((states[1].z.row(2) - z.row(2).normalized()).norm(), 1e-15);
}

TEST(Forward, NonFiniteActivationsNameTheLayer) {
  const gfl::TransformerState z0{Matrix::Ones(2, 2), BlockLayout::single(2)};
  LayerWeights grow = LayerWeights::zeros(2);
  grow.residual = 1e200 * Matrix::Identity(2, 2);
  const std::vector<LayerWeights> ws{grow, grow, grow};
  try {
    gfl::forward(z0, ws);
    FAIL() << "expected NumericalError";
  } catch (const gfl::NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("layer 1"), std::string::npos) << e.what();
  }
}

TEST(Forward, RejectsMismatchedShapes) {
  const gfl::TransformerState z0{Matrix::Ones(3, 2), BlockLayout::single(3)};
  const std::vector<LayerWeights> ws{LayerWeights::zeros(4)};
  EXPECT_THROW(gfl::forward(z0, ws), gfl::InvalidArgument);
  const gfl::TransformerState bad{Matrix::Ones(4, 2), BlockLayout::single(3)};
  EXPECT_THROW(gfl::forward(bad, {}), gfl::InvalidArgument);
}

gfl::EfficientLayerWeights random_efficient(int m, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  gfl::EfficientLayerWeights w;
  w.alpha_value = g(rng);
  w.alpha_query = g(rng);
  w.alpha_key = g(rng);
  w.alpha_residual = g(rng);
  w.value_phi = oracle::random_matrix(m, m, seed + 1, scale);
  w.query_phi = oracle::random_matrix(m, m, seed + 2, scale);
  w.key_phi = oracle::random_matrix(m, m, seed + 3, scale);
  w.residual_phi = oracle::random_matrix(m, m, seed + 4, scale);
  return w;
}

TEST(EfficientForward, AgreesWithLiftedFullDynamics) {
  const auto g = oracle::random_connected(6, 0.4, 21);
  const Matrix bt = oracle::incidence(g).transpose();
  const int d = g.num_edges();
  const Matrix phi_t = oracle::random_matrix(4, 6, 22, 0.5);
  std::vector<gfl::EfficientLayerWeights> ws;
  std::vector<LayerWeights> full;
  for (int l = 0; l < 5; ++l) {
    ws.push_back(random_efficient(4, 200 + 10 * l, 0.15));
    full.push_back(gfl::to_full(ws.back(), d));
  }
  const auto traj = gfl::efficient_forward(bt, phi_t, ws);
  Matrix z0(d + 4, 6);
  z0 << bt, phi_t;
  const auto states = gfl::forward({z0, BlockLayout::eigen(d, 4)}, full);
  ASSERT_EQ(traj.phi.size(), states.size());
  for (std::size_t l = 0; l < states.size(); ++l) {
    const double scale = std::max(1.0, states[l].z.cwiseAbs().maxCoeff());
    EXPECT_LE((traj.incidence[l] - states[l].z.topRows(d)).cwiseAbs().maxCoeff(), 1e-12 * scale);
    EXPECT_LE((traj.phi[l] - states[l].z.bottomRows(4)).cwiseAbs().maxCoeff(), 1e-12 * scale);
  }
}

TEST(EfficientForward, LiftIsBlockDiagonal) {
  const auto w = random_efficient(2, 5, 1.0);
  const auto full = gfl::to_full(w, 3);
  EXPECT_EQ(full.height(), 5);
  EXPECT_TRUE(full.value.topLeftCorner(3, 3).isApprox(w.alpha_value * Matrix::Identity(3, 3)));
  EXPECT_EQ(full.value.topRightCorner(3, 2).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(full.query_key.bottomLeftCorner(2, 3).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_TRUE(full.query_key.bottomRightCorner(2, 2).isApprox(w.query_phi.transpose() * w.key_phi));
  EXPECT_TRUE(full.residual.bottomRightCorner(2, 2).isApprox(w.residual_phi));
}

TEST(EfficientForward, RowNormalisationAndValidation) {
  const Matrix bt = oracle::incidence(oracle::triangle()).transpose();
  Matrix phi_t = oracle::random_matrix(2, 3, 8);
  auto w = gfl::EfficientLayerWeights::zeros(2);
  w.residual_phi(1, 1) = 4.0;
  const auto traj = gfl::efficient_forward(bt, phi_t, std::vector{w}, gfl::BlockRange{Block::phi, 1, 1});
  EXPECT_NEAR(traj.final_phi().row(1).norm(), 1.0, 1e-15);
  EXPECT_TRUE(traj.final_phi().row(0).isApprox(phi_t.row(0), 0.0));
  EXPECT_THROW(gfl::efficient_forward(bt, phi_t, std::vector{gfl::EfficientLayerWeights::zeros(3)}),
               gfl::InvalidArgument);
  EXPECT_THROW(gfl::efficient_forward(bt, Matrix::Ones(2, 4), {}), gfl::InvalidArgument);
  EXPECT_THROW(gfl::efficient_forward(bt, phi_t, {}, gfl::BlockRange{Block::phi, 1, 2}), gfl::InvalidArgument);
}

}  // namespace
