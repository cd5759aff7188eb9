#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "bayesgcn/posterior.hpp"
#include "bayesgcn/rng.hpp"

using namespace bayesgcn;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("bayesgcn_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> read_lines(const fs::path& file) {
  std::ifstream in(file);
  REQUIRE(in.good());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

// A chain whose traces and retained samples are simple functions of the step
// index, so pooling and burn-in cuts have closed-form answers.
ChainStore make_chain(int id, long budget, long switch_index, long thin, long dim) {
  ChainStore c;
  c.replica_id = id;
  c.base_temperature = 1.0 + id;
  c.budget = budget;
  c.switch_index = switch_index;
  c.thin = thin;
  c.param_dim = dim;
  for (long s = 0; s < budget; ++s) {
    c.log_lik_trace.push_back(id * 1000.0 + s);
    c.train_acc_trace.push_back(id * 10.0 + s);
    c.test_acc_trace.push_back(id * 20.0 - s);
  }
  for (long s = switch_index; s < budget; s += thin) {
    c.sample_steps.push_back(s);
    for (long k = 0; k < dim; ++k) c.sample_data.push_back(id * 100.0 + s + 0.125 * k);
    ++c.sample_count;
  }
  return c;
}

}  // namespace

TEST_CASE("summarize: mean, max and population standard deviation") {
  const auto s = summarize({70.0, 80.0});
  CHECK(s.mean == 75.0);
  CHECK(s.max == 80.0);
  CHECK(s.std_dev == 5.0);

  const auto one = summarize({3.5});
  CHECK(one.mean == 3.5);
  CHECK(one.max == 3.5);
  CHECK(one.std_dev == 0.0);

  CHECK_THROWS_AS(summarize({}), std::invalid_argument);
}

TEST_CASE("pool_trace applies the burn-in cut per chain") {
  const std::vector<ChainStore> chains = {make_chain(0, 100, 60, 1, 1),
                                          make_chain(1, 100, 60, 1, 1)};

  SUBCASE("0.6 of a 100-step budget keeps the last 40 steps of each chain") {
    const auto pooled = pool_trace(chains, TraceKind::log_lik, 0.6);
    REQUIRE(pooled.size() == 80);
    CHECK(pooled.front() == 60.0);
    CHECK(pooled[39] == 99.0);
    CHECK(pooled[40] == 1060.0);
    CHECK(pooled.back() == 1099.0);
  }
  SUBCASE("zero burn-in keeps everything") {
    CHECK(pool_trace(chains, TraceKind::train_acc, 0.0).size() == 200);
  }
  SUBCASE("the cut rounds to nearest, so 0.995 of 100 leaves nothing") {
    CHECK_THROWS_AS(pool_trace(chains, TraceKind::log_lik, 0.995), std::invalid_argument);
  }
  SUBCASE("fraction outside [0, 1) is rejected") {
    CHECK_THROWS_AS(pool_trace(chains, TraceKind::log_lik, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(pool_trace(chains, TraceKind::log_lik, -0.1), std::invalid_argument);
  }
}

TEST_CASE("pool_coordinate filters retained samples by their recorded step") {
  const std::vector<ChainStore> chains = {make_chain(0, 100, 60, 4, 2),
                                          make_chain(1, 100, 60, 4, 2)};
  // Each chain retains steps 60, 64, ..., 96: ten samples.
  REQUIRE(chains[0].sample_count == 10);

  const auto all = pool_coordinate(chains, 1, 0.6);
  REQUIRE(all.size() == 20);
  CHECK(all[0] == 60.125);
  CHECK(all[10] == 160.125);

  // Cut at llround(0.8 * 100) = 80 keeps steps 80, 84, 88, 92, 96.
  const auto late = pool_coordinate(chains, 0, 0.8);
  REQUIRE(late.size() == 10);
  CHECK(late[0] == 80.0);

  CHECK_THROWS_AS(pool_coordinate(chains, 2, 0.6), std::invalid_argument);
  CHECK_THROWS_AS(pool_coordinate(chains, -1, 0.6), std::invalid_argument);
}

TEST_CASE("gelman_rubin_scalar worked values and properties") {
  SUBCASE("identical constant chains give exactly 1") {
    CHECK(gelman_rubin_scalar({{5.0, 5.0, 5.0}, {5.0, 5.0, 5.0}}) == 1.0);
  }
  SUBCASE("constant chains with different levels diverge") {
    CHECK(std::isinf(gelman_rubin_scalar({{5.0, 5.0, 5.0}, {6.0, 6.0, 6.0}})));
  }
  SUBCASE("independent same-distribution chains stay near 1") {
    std::vector<std::vector<double>> chains(8);
    for (int j = 0; j < 8; ++j) {
      Rng rng(100 + j);
      for (int i = 0; i < 1000; ++i) chains[j].push_back(rng.normal());
    }
    const double rhat = gelman_rubin_scalar(chains);
    CHECK(rhat >= 0.99);
    CHECK(rhat <= 1.05);
  }
  SUBCASE("well-separated chains score far above 1") {
    std::vector<std::vector<double>> chains(4);
    for (int j = 0; j < 4; ++j) {
      Rng rng(200 + j);
      for (int i = 0; i < 500; ++i) chains[j].push_back(5.0 * j + rng.normal());
    }
    CHECK(gelman_rubin_scalar(chains) > 2.0);
  }
  SUBCASE("the statistic is invariant under affine maps") {
    std::vector<std::vector<double>> x(3), y(3);
    for (int j = 0; j < 3; ++j) {
      Rng rng(300 + j);
      for (int i = 0; i < 200; ++i) {
        const double v = rng.normal() + 0.1 * j;
        x[j].push_back(v);
        y[j].push_back(3.7 * v - 11.0);
      }
    }
    CHECK(gelman_rubin_scalar(y) == doctest::Approx(gelman_rubin_scalar(x)).epsilon(1e-12));
  }
  SUBCASE("input validation") {
    CHECK_THROWS_AS(gelman_rubin_scalar({{1.0, 2.0}}), std::invalid_argument);
    CHECK_THROWS_AS(gelman_rubin_scalar({{1.0}, {2.0}}), std::invalid_argument);
    CHECK_THROWS_AS(gelman_rubin_scalar({{1.0, 2.0}, {1.0, 2.0, 3.0}}), std::invalid_argument);
  }
}

TEST_CASE("gelman_rubin over chain stores") {
  auto a = make_chain(0, 100, 60, 4, 2);
  auto b = make_chain(1, 100, 60, 4, 2);
  // Overwrite coordinate 0 with draws from one distribution and coordinate 1
  // with chain-specific constants.
  Rng rng(7);
  for (long s = 0; s < a.sample_count; ++s) {
    a.sample_data[static_cast<std::size_t>(s) * 2] = rng.normal();
    b.sample_data[static_cast<std::size_t>(s) * 2] = rng.normal();
    a.sample_data[static_cast<std::size_t>(s) * 2 + 1] = 2.0;
    b.sample_data[static_cast<std::size_t>(s) * 2 + 1] = 3.0;
  }
  const std::vector<ChainStore> chains = {a, b};

  CHECK(gelman_rubin(chains, 0, 0.0) < 1.6);
  CHECK(std::isinf(gelman_rubin(chains, 1, 0.0)));
  // A later cut leaves 5 samples per chain, below the floor of 10.
  CHECK_THROWS_AS(gelman_rubin(chains, 0, 0.8), std::invalid_argument);
  CHECK_THROWS_AS(gelman_rubin(chains, 5, 0.0), std::invalid_argument);
}

TEST_CASE("export_trace writes one row per retained sample") {
  const auto dir = fresh_dir("trace");
  ChainStore c = make_chain(2, 10, 4, 3, 1);  // retains steps 4, 7
  c.sample_data = {0.5, -1.25};
  const auto file = dir / "trace_w0.csv";
  export_trace({c}, 0, file);
  const auto lines = read_lines(file);
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "step,value,replica");
  CHECK(lines[1] == "4,0.5,2");
  CHECK(lines[2] == "7,-1.25,2");

  CHECK_THROWS_AS(export_trace({c}, 1, dir / "bad.csv"), std::invalid_argument);
}

TEST_CASE("export_histogram bins, conserves counts, and collapses constants") {
  const auto dir = fresh_dir("hist");

  SUBCASE("worked 2-bin example") {
    export_histogram({0.0, 1.0, 2.0, 3.0}, 2, dir / "h.csv");
    const auto lines = read_lines(dir / "h.csv");
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "bin_center,count");
    CHECK(lines[1] == "0.75,2");
    CHECK(lines[2] == "2.25,2");
  }
  SUBCASE("counts sum to the sample count, zero bins included") {
    Rng rng(13);
    std::vector<double> pooled;
    for (int i = 0; i < 500; ++i) pooled.push_back(rng.normal());
    export_histogram(pooled, 7, dir / "c.csv");
    const auto lines = read_lines(dir / "c.csv");
    REQUIRE(lines.size() == 8);
    long total = 0;
    for (std::size_t i = 1; i < lines.size(); ++i)
      total += std::stol(lines[i].substr(lines[i].find(',') + 1));
    CHECK(total == 500);
  }
  SUBCASE("constant input becomes a single full bin") {
    export_histogram(std::vector<double>(10, 4.25), 50, dir / "k.csv");
    const auto lines = read_lines(dir / "k.csv");
    REQUIRE(lines.size() == 2);
    CHECK(lines[1] == "4.25,10");
  }
  SUBCASE("invalid input") {
    CHECK_THROWS_AS(export_histogram({}, 2, dir / "x.csv"), std::invalid_argument);
    CHECK_THROWS_AS(export_histogram({1.0}, 0, dir / "x.csv"), std::invalid_argument);
  }
}

TEST_CASE("write_chain_outputs emits every artifact and a decodable binary") {
  const auto dir = fresh_dir("outputs");
  const std::vector<ChainStore> chains = {make_chain(0, 20, 12, 2, 3),
                                          make_chain(1, 20, 12, 2, 3)};
  const auto written = write_chain_outputs(dir, chains, {0, 2}, 4, 0.6);

  // Four files per chain plus a trace and histogram per weight id.
  REQUIRE(written.size() == 12);
  for (const auto& p : written) CHECK(fs::exists(p));
  CHECK(fs::exists(dir / "accuracy_trace_r0.csv"));
  CHECK(fs::exists(dir / "loglik_trace_r1.csv"));
  CHECK(fs::exists(dir / "samples_r0.bin"));
  CHECK(fs::exists(dir / "samples_r1.json"));
  CHECK(fs::exists(dir / "trace_w0.csv"));
  CHECK(fs::exists(dir / "hist_w2.csv"));

  SUBCASE("scalar traces cover the full budget") {
    CHECK(read_lines(dir / "accuracy_trace_r0.csv").size() == 21);
    const auto lik = read_lines(dir / "loglik_trace_r1.csv");
    REQUIRE(lik.size() == 21);
    CHECK(lik[0] == "step,log_lik");
    CHECK(lik[1] == "0,1000");
  }

  SUBCASE("the binary round-trips through its documented layout") {
    std::ifstream side_in(dir / "samples_r0.json");
    const auto side = nlohmann::json::parse(side_in);
    CHECK(side.at("replica") == 0);
    CHECK(side.at("rows") == chains[0].sample_count);
    CHECK(side.at("cols") == 3);
    CHECK(side.at("start_step") == 12);
    CHECK(side.at("stride") == 2);
    CHECK(side.at("dtype") == "float64");
    CHECK(side.at("byte_order") == "little");

    std::ifstream bin(dir / "samples_r0.bin", std::ios::binary);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(bin)),
                                     std::istreambuf_iterator<char>());
    REQUIRE(bytes.size() == chains[0].sample_data.size() * 8);
    for (std::size_t i = 0; i < chains[0].sample_data.size(); ++i) {
      std::uint64_t bits = 0;
      for (int b = 7; b >= 0; --b) bits = (bits << 8) | bytes[i * 8 + static_cast<std::size_t>(b)];
      double value;
      static_assert(sizeof(value) == sizeof(bits));
      std::memcpy(&value, &bits, sizeof(value));
      CHECK(value == chains[0].sample_data[i]);
    }
  }
}
