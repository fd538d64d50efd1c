#include <gtest/gtest.h>

#include <map>
#include <random>

#include "random_systems.hpp"
#include "vcincs/actuator.hpp"
#include "vcincs/network.hpp"
#include "vcincs/stability.hpp"
#include "vcincs/vci_controller.hpp"

using namespace vcincs;

namespace {

PlantModel scalar_plant(double a, double b) {
  return PlantModel(Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, b), Matrix::Zero(1, 1));
}

Vector perfect_q(int n_seq) {
  Vector q = Vector::Zero(n_seq + 2);
  q(0) = 1.0;
  return q;
}

JumpLinearSystem scalar_loop(double a, double l, const Vector& q, int n_seq) {
  const PlantModel plant = scalar_plant(a, 1.0);
  const Matrix p = build_transition_matrix(q);
  const Matrix lt = build_augmented_gain(plant, Matrix::Constant(1, 1, l), stationary_distribution(p), n_seq,
                                         Vector::Zero(1));
  return closed_loop_modes(plant, lt, p, n_seq);
}

} // namespace

TEST(ShiftMatrices, HandInstanceN1) {
  const auto [f, g] = build_shift_matrices(1, 1);
  EXPECT_EQ(f, Matrix::Zero(1, 1));
  Matrix expected(1, 2);
  expected << 0, 1;
  EXPECT_EQ(g, expected);
}

TEST(ShiftMatrices, Shapes) {
  for (int n = 1; n <= 3; ++n) {
    for (int big_n = 1; big_n <= 4; ++big_n) {
      const auto [f, g] = build_shift_matrices(n, big_n);
      const Eigen::Index d = n * big_n * (big_n + 1) / 2;
      EXPECT_EQ(f.rows(), d);
      EXPECT_EQ(f.cols(), d);
      EXPECT_EQ(g.rows(), d);
      EXPECT_EQ(g.cols(), (big_n + 1) * n);
    }
  }
}

TEST(ShiftMatrices, MatchBookkeeping) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  for (int n = 1; n <= 2; ++n) {
    for (int big_n = 1; big_n <= 4; ++big_n) {
      const auto [f, g] = build_shift_matrices(n, big_n);
      Vector eta(eta_dim(n, big_n));
      for (Eigen::Index i = 0; i < eta.size(); ++i) eta(i) = nd(rng);
      std::vector<Vector> packet;
      for (int m = 0; m <= big_n; ++m) {
        Vector u(n);
        for (Eigen::Index i = 0; i < n; ++i) u(i) = nd(rng);
        packet.push_back(u);
      }
      const Vector model = f * eta + g * stack_packet(packet);
      EXPECT_EQ(model, shift_eta(eta, packet, n, big_n));
    }
  }
}

TEST(SelectionMatrices, FreshAndExhausted) {
  const int big_n = 2;
  auto [h0, j0] = build_selection_matrices(1, big_n, 0);
  EXPECT_EQ(h0, Matrix::Zero(1, 3));
  Matrix j_expected = Matrix::Zero(1, 3);
  j_expected(0, 0) = 1;
  EXPECT_EQ(j0, j_expected);

  auto [he, je] = build_selection_matrices(1, big_n, big_n + 1);
  EXPECT_EQ(he, Matrix::Zero(1, 3));
  EXPECT_EQ(je, Matrix::Zero(1, 3));
}

TEST(SelectionMatrices, OutOfRangeThrows) {
  EXPECT_THROW(build_selection_matrices(1, 2, -1), std::out_of_range);
  EXPECT_THROW(build_selection_matrices(1, 2, 4), std::out_of_range);
}

TEST(SelectionMatrices, CoSimulationWithActuator) {
  const int big_n = 3;
  const Eigen::Index n = 2;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  const DelayModel delays({0.3, 0.2, 0.2, 0.1, 0.1, 0.1}, 0.1);
  std::vector<std::pair<Matrix, Matrix>> sel;
  for (int t = 0; t <= big_n + 1; ++t) sel.push_back(build_selection_matrices(n, big_n, t));

  ActuatorBuffer buf(big_n, Vector::Zero(n));
  std::multimap<long, Packet> in_flight;
  Vector eta = Vector::Zero(eta_dim(n, big_n));
  for (long k = 0; k < 5000; ++k) {
    Packet p;
    p.timestamp = k;
    for (int m = 0; m <= big_n; ++m) {
      Vector u(n);
      for (Eigen::Index i = 0; i < n; ++i) u(i) = nd(rng);
      p.inputs.push_back(u);
    }
    const Vector stacked = stack_packet(p.inputs);
    const Vector next_eta = shift_eta(eta, p.inputs, n, big_n);
    if (auto d = delays.sample_delay(rng)) in_flight.emplace(k + *d, std::move(p));
    const auto [first, last] = in_flight.equal_range(k);
    for (auto it = first; it != last; ++it) buf.offer_packet(it->second);
    in_flight.erase(first, last);
    const Actuation act = buf.actuate(k);
    const auto& [h, j] = sel[static_cast<std::size_t>(act.age)];
    const Vector model = h * eta + j * stacked;
    ASSERT_EQ(model, act.input) << "step " << k << " age " << act.age;
    eta = next_eta;
  }
}

TEST(ClosedLoop, ShapesAndExhaustedMode) {
  const PlantModel plant(Matrix::Identity(2, 2) * 1.1, Matrix::Ones(2, 1), Matrix::Zero(2, 2));
  const int big_n = 2;
  const Matrix p = build_transition_matrix((Vector(4) << 0.4, 0.3, 0.2, 0.1).finished());
  Matrix l(1, 2);
  l << -0.5, -0.3;
  const Matrix lt = build_augmented_gain(plant, l, stationary_distribution(p), big_n, Vector::Zero(1));
  const JumpLinearSystem sys = closed_loop_modes(plant, lt, p, big_n);
  ASSERT_EQ(sys.modes.size(), 4u);
  for (const auto& m : sys.modes) EXPECT_EQ(m.rows(), 2 + 3);
  EXPECT_EQ(Matrix(sys.modes.back().topLeftCorner(2, 2)), plant.a());
}

TEST(ClosedLoop, PerfectNetworkSpectrum) {
  const PlantModel plant = pendulum_plant(PendulumParams{});
  const Matrix l = lqr_gain(plant.a(), plant.b(), pendulum_lqr_q(), pendulum_lqr_r());
  const int big_n = 2;
  const Matrix p = build_transition_matrix(perfect_q(big_n));
  const Matrix lt = build_augmented_gain(plant, l, stationary_distribution(p), big_n, Vector::Zero(1));
  const JumpLinearSystem sys = closed_loop_modes(plant, lt, p, big_n);
  EXPECT_NEAR(spectral_radius(sys.modes[0]), spectral_radius(Matrix(plant.a() + plant.b() * l)), 1e-9);
}

TEST(ClosedLoop, RejectsBadGainShape) {
  const PlantModel plant = scalar_plant(1, 1);
  EXPECT_THROW(closed_loop_modes(plant, Matrix::Zero(3, 2), build_transition_matrix(perfect_q(1)), 1),
               std::invalid_argument);
}

TEST(Mss, ScalarHandExample) {
  const MssVerdict v = mss_check(scalar_loop(2.0, -1.5, perfect_q(1), 1));
  EXPECT_NEAR(v.radius, 0.25, 1e-12);
  EXPECT_TRUE(v.is_mss);
}

TEST(Mss, NoFeedbackUnstable) {
  const MssVerdict v = mss_check(scalar_loop(2.0, 0.0, (Vector(3) << 0.5, 0.3, 0.2).finished(), 1));
  EXPECT_GE(v.radius, 4.0 - 1e-12);
  EXPECT_FALSE(v.is_mss);
}

TEST(Mss, StableAutonomousModes) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    const int big_n = 1 + t % 2;
    const Matrix p = build_transition_matrix(vcincs::testing::random_delay_weights(rng, big_n));
    const Matrix lt = Matrix::Zero(big_n + 1, 2 + eta_dim(1, big_n));
    Matrix a(2, 2);
    a << 0.5, 0.3, -0.2, 0.7;
    const JumpLinearSystem sys = closed_loop_modes(PlantModel(a, Matrix::Ones(2, 1), Matrix::Zero(2, 2)), lt, p, big_n);
    EXPECT_TRUE(mss_check(sys).is_mss);
  }
}

TEST(Mss, PerfectNetworkRadiusIsSquaredClosedLoopRadius) {
  const PlantModel plant = pendulum_plant(PendulumParams{});
  const Matrix l = lqr_gain(plant.a(), plant.b(), pendulum_lqr_q(), pendulum_lqr_r());
  for (int big_n = 1; big_n <= 2; ++big_n) {
    const Matrix p = build_transition_matrix(perfect_q(big_n));
    const Matrix lt = build_augmented_gain(plant, l, stationary_distribution(p), big_n, Vector::Zero(1));
    const double rho = spectral_radius(Matrix(plant.a() + plant.b() * l));
    EXPECT_NEAR(mss_check(closed_loop_modes(plant, lt, p, big_n)).radius, rho * rho, 1e-8);
  }
}

TEST(Mss, CapacityGuard) {
  const JumpLinearSystem sys = scalar_loop(2.0, -1.5, perfect_q(1), 1);
  EXPECT_THROW(mss_check(sys, MssOptions{10}), CapacityError);
  EXPECT_NO_THROW(mss_check(sys, MssOptions{12}));
}

TEST(Mss, OperatorBlockStructure) {
  const JumpLinearSystem sys = scalar_loop(1.2, -0.7, (Vector(3) << 0.5, 0.3, 0.2).finished(), 1);
  const Matrix op = second_moment_operator(sys);
  const Eigen::Index m2 = 4;
  for (Eigen::Index j = 0; j < 3; ++j) {
    for (Eigen::Index i = 0; i < 3; ++i) {
      const Matrix expected = sys.transition(i, j) * kron(sys.modes[static_cast<std::size_t>(i)],
                                                         sys.modes[static_cast<std::size_t>(i)]);
      EXPECT_LT((op.block(j * m2, i * m2, m2, m2) - expected).cwiseAbs().maxCoeff(), 1e-15);
    }
  }
}

TEST(MomentOracle, HandExamples) {
  EXPECT_EQ(moment_iteration_oracle(scalar_loop(2.0, -1.5, perfect_q(1), 1), 200), MomentTrend::Decays);
  EXPECT_EQ(moment_iteration_oracle(scalar_loop(2.0, 0.0, perfect_q(1), 1), 200), MomentTrend::Diverges);
}

TEST(MomentOracle, BoundaryMayBeInconclusive) {
  // Closed loop exactly on the unit circle: the trace stays put.
  EXPECT_EQ(moment_iteration_oracle(scalar_loop(2.0, -1.0, perfect_q(1), 1), 500), MomentTrend::Inconclusive);
}

TEST(MomentOracle, RejectsShortRuns) {
  EXPECT_THROW(moment_iteration_oracle(scalar_loop(2.0, -1.5, perfect_q(1), 1), 99), std::invalid_argument);
}

TEST(MomentOracle, AgreesWithMssCheckOnRandomSystems) {
  std::mt19937_64 rng(2024);
  int conclusive = 0;
  for (int t = 0; t < 60; ++t) {
    const auto loop = vcincs::testing::random_loop(rng);
    const MomentTrend trend = moment_iteration_oracle(loop.sys, 5000);
    if (trend == MomentTrend::Inconclusive) continue;
    ++conclusive;
    EXPECT_EQ(mss_check(loop.sys).is_mss, trend == MomentTrend::Decays) << "draw " << t;
  }
  EXPECT_GE(conclusive, 54);
}
