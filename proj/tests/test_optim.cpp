#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "zpj/error.hpp"
#include "zpj/optim.hpp"
#include "zpj/params.hpp"

using namespace zpj;

namespace {

ParameterStore scalar_store(double value) {
  ParameterStore s;
  s.add("p", Tensor::from({1}, {value}, true), Group::theta);
  return s;
}

}  // namespace

TEST(Adadelta, ZeroGradientLeavesParameterAndDecaysAccumulators) {
  auto store = scalar_store(1.5);
  Adadelta opt(0.95, 1e-6);
  store.entries()[0].value.mutable_grad()[0] = 1.0;
  opt.step(store);
  double g_acc = opt.grad_accumulator("p")[0];
  double u_acc = opt.update_accumulator("p")[0];
  double before = store.get("p").values()[0];
  opt.step(store);  // grads were zeroed by the previous step
  EXPECT_DOUBLE_EQ(store.get("p").values()[0], before);
  EXPECT_DOUBLE_EQ(opt.grad_accumulator("p")[0], 0.95 * g_acc);
  EXPECT_DOUBLE_EQ(opt.update_accumulator("p")[0], 0.95 * u_acc);
}

TEST(Adadelta, FirstStepMatchesClosedForm) {
  auto store = scalar_store(0.0);
  Adadelta opt(0.95, 1e-6);
  store.entries()[0].value.mutable_grad()[0] = 1.0;
  opt.step(store);
  double expect = -std::sqrt(1e-6 / (0.05 + 1e-6));
  EXPECT_NEAR(store.get("p").values()[0], expect, 1e-15);
  EXPECT_NEAR(expect, -4.47e-3, 1e-5);
  EXPECT_EQ(store.get("p").grad()[0], 0.0);
}

TEST(Adadelta, UpdatesGrowWhileAccumulatorWarmsUp) {
  auto store = scalar_store(0.0);
  Adadelta opt(0.95, 1e-6);
  double prev = 0.0, last_delta = 0.0;
  for (int i = 0; i < 2; ++i) {
    store.entries()[0].value.mutable_grad()[0] = 1.0;
    opt.step(store);
    double now = store.get("p").values()[0];
    double delta = std::abs(now - prev);
    EXPECT_GT(delta, last_delta);
    last_delta = delta;
    prev = now;
  }
  // second step from the Python trace of the update rule
  EXPECT_NEAR(last_delta, 4.529062265533204e-3, 1e-12);
}

TEST(Adadelta, MissingGradNamesParameter) {
  ParameterStore store;
  store.add("w", Tensor::from({1}, {1.0}, true), Group::theta);
  // simulate a parameter without gradient storage
  store.entries().push_back({"bare", Group::theta, Tensor::from({2}, {0.0, 0.0}, false)});
  Adadelta opt;
  try {
    opt.step(store);
    FAIL();
  } catch (const ContractError& e) {
    EXPECT_NE(std::string(e.what()).find("bare"), std::string::npos);
  }
}

TEST(Adadelta, RejectsBadConstants) {
  EXPECT_THROW(Adadelta(1.0, 1e-6), ContractError);
  EXPECT_THROW(Adadelta(0.9, 0.0), ContractError);
}

TEST(ClipGradNorm, RescalesToMaximum) {
  auto store = scalar_store(0.0);
  store.entries()[0].value.mutable_grad()[0] = -10.0;
  EXPECT_DOUBLE_EQ(clip_grad_norm(store, 5.0), 10.0);
  EXPECT_DOUBLE_EQ(store.get("p").grad()[0], -5.0);
}

TEST(ParameterStore, UniqueNamesAndGroups) {
  ParameterStore s;
  std::mt19937_64 rng(1);
  s.add("a", {2, 3}, Group::theta, rng);
  s.add("b", {4}, Group::gamma, rng);
  EXPECT_THROW(s.add("a", {1}, Group::gamma, rng), ContractError);
  EXPECT_EQ(s.count(), 10u);
  EXPECT_EQ(s.count(Group::theta), 6u);
  EXPECT_EQ(s.count(Group::gamma), 4u);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  ParameterStore s;
  std::mt19937_64 rng(9);
  s.add("encoder.gru.W_z", {3, 4}, Group::theta, rng);
  s.add("labeler.out.W", {4, 5}, Group::gamma, rng);
  s.entries()[0].value.mutable_values()[0] = 1.0 / 3.0;
  auto path = std::filesystem::temp_directory_path() / "zpj_ckpt_test.bin";
  save_checkpoint(path, s, {{"config", "a=1\n"}});
  auto ck = load_checkpoint(path);
  ASSERT_EQ(ck.params.size(), 2u);
  EXPECT_EQ(ck.meta.at("config"), "a=1\n");
  for (std::size_t i = 0; i < 2; ++i) {
    auto& a = s.entries()[i];
    auto& b = ck.params.entries()[i];
    EXPECT_EQ(a.name, b.name);
    EXPECT_EQ(a.group, b.group);
    EXPECT_EQ(a.value.shape(), b.value.shape());
    EXPECT_EQ(0, std::memcmp(a.value.values().data(), b.value.values().data(),
                             a.value.size() * sizeof(double)));
  }
  EXPECT_EQ(s.hash(), ck.params.hash());
  std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsUnknownVersion) {
  ParameterStore s;
  auto path = std::filesystem::temp_directory_path() / "zpj_ckpt_version.bin";
  save_checkpoint(path, s, {});
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(8);
    std::uint32_t v = 99;
    f.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  EXPECT_THROW(load_checkpoint(path), FormatError);
  std::filesystem::remove(path);
}
