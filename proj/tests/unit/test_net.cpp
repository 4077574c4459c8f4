#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "nuclick/checkpoint.hpp"
#include "nuclick/net.hpp"
#include "oracles.hpp"

using namespace nuclick;

namespace {

nn::Tensor<float> random_input(int n, int size, Rng& rng) {
  nn::Tensor<float> t({n, 5, size, size});
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (auto& v : t.storage()) v = u(rng);
  return t;
}

std::size_t ms_block_size(std::size_t c, std::size_t branches) {
  const std::size_t branch = c * c * 9 + c + 2 * c;
  const std::size_t fuse = branches * c * c + c + 2 * c;
  return branches * branch + fuse;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("nuclick_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST(Network, ShapeAndRange) {
  Rng rng(1);
  NetworkConfig cfg;
  const auto params = net::build<float>(cfg, rng);
  const auto out = net::predict(params, random_input(2, 64, rng));
  EXPECT_EQ(out.shape(), (std::vector<int>{2, 1, 64, 64}));
  for (float v : out.storage()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
}

TEST(Network, IndivisibleSizeThrows) {
  Rng rng(1);
  const auto params = net::build<float>(NetworkConfig{}, rng);
  EXPECT_THROW(net::predict(params, random_input(1, 36, rng)), InvalidInput);
}

TEST(Network, ConfigValidation) {
  Rng rng(1);
  NetworkConfig bad;
  bad.ms_block_levels = {0, 3};
  EXPECT_THROW(net::build<float>(bad, rng), InvalidConfig);
  NetworkConfig channels;
  channels.input_channels = 4;
  EXPECT_THROW(net::build<float>(channels, rng), InvalidConfig);
}

TEST(Network, ParameterCountIsPureAndMsBlocksAreAnalytic) {
  Rng a(1);
  Rng b(2);
  NetworkConfig cfg;
  const auto full = net::build<float>(cfg, a).parameter_count();
  EXPECT_EQ(full, net::build<float>(cfg, b).parameter_count());
  NetworkConfig plain = cfg;
  plain.ms_block_levels.clear();
  const auto bare = net::build<float>(plain, a).parameter_count();
  std::size_t expected = 0;
  for (int l : cfg.ms_block_levels) expected += 2 * ms_block_size(cfg.width_at(l), cfg.ms_dilations.size());
  EXPECT_EQ(full - bare, expected);
}

TEST(Network, BatchPermutationPermutesOutputs) {
  Rng rng(3);
  NetworkConfig cfg;
  cfg.patch_size = 32;
  const auto params = net::build<float>(cfg, rng);
  const auto in = random_input(3, 32, rng);
  nn::Tensor<float> swapped(in.shape());
  const std::size_t plane = 5 * 32 * 32;
  const int order[3] = {2, 0, 1};
  for (int i = 0; i < 3; ++i) std::copy_n(in.data() + order[i] * plane, plane, swapped.data() + i * plane);
  const auto out = net::predict(params, in);
  const auto out2 = net::predict(params, swapped);
  for (int i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < 32 * 32; ++k) ASSERT_EQ(out2[i * 1024 + k], out[order[i] * 1024 + k]);
  }
  EXPECT_EQ(net::predict(params, in), out);
}

TEST(Network, ForwardGradientCheckInDoubleMode) {
  Rng rng(4);
  NetworkConfig cfg;
  cfg.base_width = 2;
  cfg.depth = 1;
  cfg.ms_block_levels = {0};
  cfg.ms_dilations = {1, 2};
  cfg.patch_size = 4;
  auto params = net::build<double>(cfg, rng);
  auto input = nn::variable(oracle::random_tensor({2, 5, 4, 4}, rng, 0.0, 1.0));
  const auto weights = oracle::random_tensor({2, 1, 4, 4}, rng);
  auto eval = [&](nn::Tape<double>* tape) {
    nn::Context<double> ctx{tape, true};
    return nn::weighted_sum(ctx, net::forward(params, input, ctx), weights);
  };
  nn::Tape<double> tape;
  tape.backward(eval(&tape));

  std::vector<nn::Var<double>> checked = {input, params.param("stem.weight"), params.param("enc0.ms.fuse.weight"),
                                          params.param("dec0.up.weight"), params.param("head.bias")};
  const double h = 1e-6;
  for (const auto& v : checked) {
    ASSERT_TRUE(v->has_grad());
    double diff2 = 0;
    double norm = 0;
    for (std::size_t i = 0; i < v->value.numel(); ++i) {
      const double x0 = v->value[i];
      v->value[i] = x0 + h;
      const double up = eval(nullptr)->value[0];
      v->value[i] = x0 - h;
      const double dn = eval(nullptr)->value[0];
      v->value[i] = x0;
      const double num = (up - dn) / (2 * h);
      diff2 += (num - v->grad[i]) * (num - v->grad[i]);
      norm += num * num + v->grad[i] * v->grad[i];
    }
    EXPECT_LT(std::sqrt(diff2 / norm), 1e-5);
  }
}

TEST(Checkpoint, RoundTripIsBitIdentical) {
  Rng rng(5);
  NetworkConfig cfg;
  cfg.kind = ModelKind::Gland;
  cfg.use_exclusion = false;
  auto params = net::build<float>(cfg, rng);
  params.bn_states()[0].mean[0] = 0.25f;
  const auto dir = temp_dir("ckpt");
  checkpoint::save(params, dir / "m.nuck");
  const auto loaded = checkpoint::load(dir / "m.nuck");
  EXPECT_EQ(loaded.config, cfg);
  ASSERT_EQ(loaded.param_names(), params.param_names());
  for (std::size_t i = 0; i < params.params().size(); ++i) EXPECT_EQ(loaded.params()[i]->value, params.params()[i]->value);
  for (std::size_t i = 0; i < params.bn_states().size(); ++i) {
    EXPECT_EQ(loaded.bn_states()[i].mean, params.bn_states()[i].mean);
    EXPECT_EQ(loaded.bn_states()[i].var, params.bn_states()[i].var);
  }
  EXPECT_EQ(checkpoint::serialize(loaded), checkpoint::serialize(params));
  EXPECT_EQ(checkpoint::peek_config(dir / "m.nuck"), cfg);
}

TEST(Checkpoint, DistinctErrors) {
  Rng rng(6);
  const auto bytes = checkpoint::serialize(net::build<float>(NetworkConfig{}, rng));
  auto truncated = bytes;
  truncated.resize(bytes.size() - 10);
  EXPECT_THROW(checkpoint::deserialize(truncated), CheckpointTruncatedError);
  auto header_cut = bytes;
  header_cut.resize(12);
  EXPECT_THROW(checkpoint::deserialize(header_cut), CheckpointTruncatedError);
  auto foreign = bytes;
  foreign[0] = 'P';
  EXPECT_THROW(checkpoint::deserialize(foreign), CheckpointVersionError);
  auto version = bytes;
  version[4] = 9;
  EXPECT_THROW(checkpoint::deserialize(version), CheckpointVersionError);

  // Claim a different architecture in the header: the manifest no longer matches.
  const std::uint32_t len = bytes[5] | (bytes[6] << 8) | (bytes[7] << 16) | (std::uint32_t(bytes[8]) << 24);
  auto header = nlohmann::json::parse(std::string(bytes.begin() + 9, bytes.begin() + 9 + len));
  header["config"]["base_width"] = 4;
  const auto text = header.dump();
  std::vector<std::uint8_t> edited(bytes.begin(), bytes.begin() + 5);
  const std::uint32_t n = static_cast<std::uint32_t>(text.size());
  for (int i = 0; i < 4; ++i) edited.push_back(static_cast<std::uint8_t>(n >> (8 * i)));
  edited.insert(edited.end(), text.begin(), text.end());
  edited.insert(edited.end(), bytes.begin() + 9 + len, bytes.end());
  EXPECT_THROW(checkpoint::deserialize(edited), CheckpointManifestError);
  EXPECT_THROW(checkpoint::load("/nonexistent/x.nuck"), IoError);
}
