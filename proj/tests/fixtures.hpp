#pragma once

// Small hand-sized instances shared by the unit and acceptance tests.

#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "edgeplan/instance.hpp"
#include "edgeplan/uncertainty.hpp"

namespace edgeplan::testing {

/// One AP, one EN, T periods, unit slot length, every price zero. Tests set
/// the entries they care about.
inline Instance blank_instance(int aps = 1, int ens = 1, int periods = 1) {
  Instance inst;
  auto& topo = inst.topology;
  topo.ap_count = aps;
  topo.en_count = ens;
  topo.delay_edge = Eigen::MatrixXd::Constant(aps, ens, 5.0);
  topo.delay_cloud = Eigen::VectorXd::Constant(aps, 30.0);
  topo.hops_edge = Eigen::MatrixXd::Constant(aps, ens, 1.0);
  topo.hops_cloud = Eigen::VectorXd::Constant(aps, 3.0);
  auto& c = inst.costs;
  c.slot_length = 1.0;
  c.reserve_price_edge = Eigen::MatrixXd::Zero(ens, periods);
  c.reserve_price_cloud = Eigen::VectorXd::Zero(periods);
  c.buy_price_edge = Eigen::MatrixXd::Zero(ens, periods);
  c.buy_price_cloud = Eigen::VectorXd::Zero(periods);
  c.sell_price_edge = Eigen::MatrixXd::Zero(ens, periods);
  c.sell_price_cloud = Eigen::VectorXd::Zero(periods);
  c.install_cost = Eigen::MatrixXd::Zero(ens, periods);
  c.storage_cost = Eigen::MatrixXd::Zero(ens, periods);
  c.download_en.assign(static_cast<std::size_t>(ens), Eigen::MatrixXd::Zero(ens, periods));
  c.download_cloud = Eigen::MatrixXd::Zero(ens, periods);
  c.bandwidth_unit = 0.0;
  c.request_size = 0.0;
  c.resource_per_request = 0.0;
  c.delay_penalty = 0.0;
  c.capacity = Eigen::VectorXd::Constant(ens, 10.0);
  c.initial_placement.assign(static_cast<std::size_t>(ens), 0);
  inst.horizon = periods;
  inst.forecast = Eigen::MatrixXd::Zero(aps, periods);
  inst.uncertainty.set = SusSpec{Eigen::MatrixXd::Zero(aps, periods), 0};
  return inst;
}

struct TinyOptions {
  int aps = 2;
  int ens = 1;
  int periods = 2;
  int budget = 1;
  bool dynamic = true;
};

/// Random small instance with prices in the simulation ranges and capacities
/// small enough that edge capacity and reservation both bind.
inline Instance tiny_instance(std::uint64_t seed, const TinyOptions& o = {}) {
  std::mt19937_64 rng(seed);
  auto U = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  const int I = o.aps, J = o.ens, T = o.periods;
  Instance inst = blank_instance(I, J, T);
  auto& topo = inst.topology;
  for (int i = 0; i < I; ++i) {
    for (int j = 0; j < J; ++j) {
      topo.delay_edge(i, j) = U(2.0, 10.0);
      topo.hops_edge(i, j) = std::floor(U(1.0, 4.0));
    }
    topo.delay_cloud(i) = U(30.0, 45.0);
    topo.hops_cloud(i) = std::floor(U(3.0, 6.0));
  }
  auto& c = inst.costs;
  c.slot_length = 1.0 / 3.0;
  for (int t = 0; t < T; ++t) {
    for (int j = 0; j < J; ++j) {
      double a, p, e;
      do {
        a = U(0.01, 0.03);
        p = U(0.08, 0.15);
        e = U(0.10, 0.15);
      } while (!(a <= p && p <= e));
      c.sell_price_edge(j, t) = a;
      c.reserve_price_edge(j, t) = p;
      c.buy_price_edge(j, t) = e;
      c.install_cost(j, t) = U(0.10, 0.15);
      c.storage_cost(j, t) = U(0.10, 0.15);
      c.download_cloud(j, t) = U(0.10, 0.30);
      for (int m = 0; m < J; ++m)
        if (m != j) c.download_en[static_cast<std::size_t>(m)](j, t) = U(0.05, 0.08);
    }
    c.reserve_price_cloud(t) = 0.06;
    c.buy_price_cloud(t) = 0.06 + U(0.03, 0.05);
    c.sell_price_cloud(t) = U(0.01, 0.02);
  }
  c.bandwidth_unit = 0.02;
  c.request_size = 0.02;
  c.resource_per_request = 0.02;
  c.delay_penalty = 0.002;
  for (int j = 0; j < J; ++j) c.capacity(j) = std::floor(U(1.0, 4.0));
  for (int i = 0; i < I; ++i)
    for (int t = 0; t < T; ++t) inst.forecast(i, t) = U(40.0, 120.0);
  if (o.dynamic) {
    DusSpec d;
    d.lag = 1;
    d.ar = Eigen::MatrixXd(I, 1);
    d.mixing = Eigen::MatrixXd::Zero(I, I);
    d.seed_residuals = Eigen::MatrixXd(I, 1);
    for (int i = 0; i < I; ++i) {
      d.ar(i, 0) = U(0.2, 0.8);
      d.seed_residuals(i, 0) = U(-10.0, 10.0);
      d.mixing(i, i) = U(10.0, 30.0);
      for (int k = 0; k < i; ++k) d.mixing(i, k) = U(-5.0, 5.0);
    }
    d.budget = o.budget;
    inst.uncertainty.set = d;
  } else {
    SusSpec s;
    s.deviation = Eigen::MatrixXd(I, T);
    for (int i = 0; i < I; ++i)
      for (int t = 0; t < T; ++t) s.deviation(i, t) = U(10.0, 40.0);
    s.budget = o.budget;
    inst.uncertainty.set = s;
  }
  return inst;
}

/// Reservation drawn uniformly inside the first-stage box.
inline FirstStage random_first_stage(const Instance& inst, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  FirstStage fs = FirstStage::zeros(inst.ens(), inst.horizon);
  for (int j = 0; j < inst.ens(); ++j)
    for (int t = 0; t < inst.horizon; ++t) fs.edge(j, t) = unit(rng) * inst.costs.capacity(j);
  for (int t = 0; t < inst.horizon; ++t) fs.cloud(t) = unit(rng) * 3.0;
  return fs;
}

}  // namespace edgeplan::testing
