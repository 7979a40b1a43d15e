#include <doctest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>

#include "evhan/errors.hpp"
#include "evhan/han.hpp"
#include "gradcheck.hpp"
#include "han_fixtures.hpp"

using namespace evhan;
using namespace evhan::testing;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("evhan_test_han_" + name)).string();
}

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

Tensor random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  Tensor t({rows, cols});
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (auto& v : t.values()) v = d(rng);
  return t;
}

std::vector<double> values(const ad::Graph& g, ad::Var v) {
  const auto s = g.value(v).values();
  return {s.begin(), s.end()};
}

std::vector<double> logits_of(HanParams& p, const SampleInput& s) {
  ad::Graph g;
  return values(g, forward(g, p, s));
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
  }
  return true;
}

HanParams model(std::size_t width, std::size_t categories, std::uint64_t seed,
                EmbedMode mode = EmbedMode::word_compose) {
  HanParams p = init_params(tiny_config(width, categories, mode), numbered_vocabulary(12), seed);
  randomize_biases(p, seed + 100);
  return p;
}

void swap_directions(HanParams& p, const std::string& block) {
  for (const char* name : {"W_z", "U_z", "b_z", "W_r", "U_r", "b_r", "W_h", "U_h", "b_h"}) {
    std::swap(p.at(block + ".fwd." + name), p.at(block + ".bwd." + name));
  }
}

}  // namespace

TEST_CASE("params: shapes follow the configuration") {
  const auto c = tiny_config(4, 3);
  const auto shapes = expected_shapes(c, 10);
  CHECK(shapes.at("embed.table") == Shape{10, 4});
  CHECK(shapes.at("word.fwd.W_z") == Shape{4, 4});
  CHECK(shapes.at("event.bwd.W_h") == Shape{8, 4});
  CHECK(shapes.at("day.att.W_n") == Shape{8, 4});
  CHECK(shapes.at("day.att.theta") == Shape{4, 1});
  CHECK(shapes.at("mlp.W2") == Shape{4, 3});
  // 4 blocks x (2 directions x 9 tensors + 3 attention) + embedding + 4 MLP tensors
  CHECK(shapes.size() == 4 * 21 + 1 + 4);

  auto pc = tiny_config(4, 3, EmbedMode::precomputed);
  pc.event_dim = 6;
  const auto pshapes = expected_shapes(pc, 0);
  CHECK_FALSE(pshapes.contains("embed.table"));
  CHECK_FALSE(pshapes.contains("word.fwd.W_z"));
  CHECK(pshapes.at("event.fwd.W_z") == Shape{6, 4});

  auto bad = c;
  bad.categories = 4;
  CHECK_THROWS_AS(expected_shapes(bad, 10), UsageError);
  CHECK_THROWS_AS(expected_shapes(c, 0), UsageError);
}

TEST_CASE("params: seeded initialisation within fan-in bounds") {
  const auto a = init_params(tiny_config(5, 2), numbered_vocabulary(7), 42);
  const auto b = init_params(tiny_config(5, 2), numbered_vocabulary(7), 42);
  const auto c = init_params(tiny_config(5, 2), numbered_vocabulary(7), 43);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  for (const auto& [name, t] : a.tensors) {
    if (t.rank() == 1) {
      for (double v : t.values()) CHECK(v == 0.0);
      continue;
    }
    const double bound = name == "embed.table" ? 1.0 : 1.0 / std::sqrt(static_cast<double>(t.dim(0)));
    for (double v : t.values()) CHECK(std::abs(v) <= bound);
  }
}

TEST_CASE("bigru: T=1 with equal directions gives equal halves") {
  HanParams p = model(3, 2, 1);
  for (const char* name : {"W_z", "U_z", "b_z", "W_r", "U_r", "b_r", "W_h", "U_h", "b_h"}) {
    p.at(std::string("event.bwd.") + name) = p.at(std::string("event.fwd.") + name);
  }
  std::mt19937_64 rng(2);
  ad::Graph g;
  const auto h = values(g, bigru(g, p, "event", g.constant(random_matrix(1, 6, rng)), {}));
  REQUIRE(h.size() == 6);
  for (std::size_t i = 0; i < 3; ++i) CHECK(h[i] == h[i + 3]);
}

TEST_CASE("bigru: zero gates reduce to the 0.5 mixing recursion") {
  HanParams p = model(3, 2, 3);
  for (auto& [name, t] : p.tensors) {
    if (name.rfind("event.", 0) == 0 && name.find("W_h") == std::string::npos && name.find("b_h") == std::string::npos)
      std::fill(t.values().begin(), t.values().end(), 0.0);
  }
  // z = sigmoid(0) = 1/2 and U_h = 0, so h_t = h_{t-1}/2 + tanh(x_t W_h + b_h)/2.
  std::mt19937_64 rng(4);
  const Tensor x = random_matrix(3, 6, rng);
  auto candidate = [&](const std::string& dir, std::size_t t) {
    const Tensor& W = p.at("event." + dir + ".W_h");
    const Tensor& b = p.at("event." + dir + ".b_h");
    std::vector<double> c(3);
    for (std::size_t j = 0; j < 3; ++j) {
      double s = b[j];
      for (std::size_t i = 0; i < 6; ++i) s += x[t * 6 + i] * W[i * 3 + j];
      c[j] = std::tanh(s);
    }
    return c;
  };
  ad::Graph g;
  const auto h = values(g, bigru(g, p, "event", g.constant(x), {}));
  for (std::size_t j = 0; j < 3; ++j) {
    const double c0 = candidate("fwd", 0)[j], c1 = candidate("fwd", 1)[j], c2 = candidate("fwd", 2)[j];
    CHECK(h[0 * 6 + j] == doctest::Approx(0.5 * c0).epsilon(1e-14));
    CHECK(h[1 * 6 + j] == doctest::Approx(0.25 * c0 + 0.5 * c1).epsilon(1e-14));
    CHECK(h[2 * 6 + j] == doctest::Approx(0.125 * c0 + 0.25 * c1 + 0.5 * c2).epsilon(1e-14));
    const double d0 = candidate("bwd", 0)[j], d1 = candidate("bwd", 1)[j], d2 = candidate("bwd", 2)[j];
    CHECK(h[2 * 6 + 3 + j] == doctest::Approx(0.5 * d2).epsilon(1e-14));
    CHECK(h[1 * 6 + 3 + j] == doctest::Approx(0.25 * d2 + 0.5 * d1).epsilon(1e-14));
    CHECK(h[0 * 6 + 3 + j] == doctest::Approx(0.125 * d2 + 0.25 * d1 + 0.5 * d0).epsilon(1e-14));
  }
}

TEST_CASE("bigru: reversing the input swaps the directions") {
  HanParams p = model(4, 2, 5);
  HanParams swapped = p;
  swap_directions(swapped, "event");
  std::mt19937_64 rng(6);
  const Tensor x = random_matrix(3, 8, rng);
  Tensor xr({3, 8});
  for (std::size_t t = 0; t < 3; ++t) {
    for (std::size_t i = 0; i < 8; ++i) xr[t * 8 + i] = x[(2 - t) * 8 + i];
  }
  ad::Graph g;
  const auto h = values(g, bigru(g, p, "event", g.constant(x), {}));
  const auto hr = values(g, bigru(g, swapped, "event", g.constant(xr), {}));
  for (std::size_t t = 0; t < 3; ++t) {
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(hr[t * 8 + j] == h[(2 - t) * 8 + 4 + j]);
      CHECK(hr[t * 8 + 4 + j] == h[(2 - t) * 8 + j]);
    }
  }
}

TEST_CASE("bigru: masked steps emit zero rows and do not advance the state") {
  HanParams p = model(3, 2, 7);
  std::mt19937_64 rng(8);
  const Tensor x = random_matrix(2, 6, rng);
  Tensor padded({3, 6});
  for (std::size_t i = 0; i < 6; ++i) {
    padded[i] = x[i];
    padded[6 + i] = 9.0;  // garbage under the mask
    padded[12 + i] = x[6 + i];
  }
  const std::vector<std::uint8_t> mask = {1, 0, 1};
  ad::Graph g;
  const auto h = values(g, bigru(g, p, "event", g.constant(x), {}));
  const auto hp = values(g, bigru(g, p, "event", g.constant(padded), mask));
  for (std::size_t j = 0; j < 6; ++j) {
    CHECK(hp[j] == h[j]);
    CHECK(hp[6 + j] == 0.0);
    CHECK(hp[12 + j] == h[6 + j]);
  }
}

TEST_CASE("attention: single position and identical rows") {
  HanParams p = model(3, 2, 9);
  std::mt19937_64 rng(10);
  ad::Graph g;
  const Tensor one = random_matrix(1, 6, rng);
  const auto pooled = attention_pool(g, p, "event", g.constant(one), {});
  CHECK(values(g, pooled.weights) == std::vector<double>{1.0});
  CHECK(values(g, pooled.vector) == std::vector<double>(one.values().begin(), one.values().end()));

  Tensor same({4, 6});
  for (std::size_t t = 0; t < 4; ++t) {
    for (std::size_t i = 0; i < 6; ++i) same[t * 6 + i] = one[i];
  }
  const auto uni = attention_pool(g, p, "event", g.constant(same), {});
  for (double b : values(g, uni.weights)) CHECK(b == doctest::Approx(0.25).epsilon(1e-15));
  const auto v = values(g, uni.vector);
  for (std::size_t i = 0; i < 6; ++i) CHECK(v[i] == doctest::Approx(one[i]).epsilon(1e-14));
}

TEST_CASE("attention: permuting positions permutes the weights") {
  HanParams p = model(3, 2, 11);
  std::mt19937_64 rng(12);
  const Tensor h = random_matrix(4, 6, rng);
  std::vector<std::size_t> perm = {2, 0, 3, 1};
  Tensor hp({4, 6});
  for (std::size_t t = 0; t < 4; ++t) {
    for (std::size_t i = 0; i < 6; ++i) hp[t * 6 + i] = h[perm[t] * 6 + i];
  }
  ad::Graph g;
  const auto a = attention_pool(g, p, "news", g.constant(h), {});
  const auto b = attention_pool(g, p, "news", g.constant(hp), {});
  const auto wa = values(g, a.weights);
  const auto wb = values(g, b.weights);
  for (std::size_t t = 0; t < 4; ++t) CHECK(wb[t] == doctest::Approx(wa[perm[t]]).epsilon(1e-14));
  CHECK(max_abs_diff(values(g, a.vector), values(g, b.vector)) < 1e-14);
  CHECK(std::accumulate(wa.begin(), wa.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("attention: masked positions get zero weight; all masked is an error") {
  HanParams p = model(3, 2, 13);
  std::mt19937_64 rng(14);
  const Tensor h = random_matrix(3, 6, rng);
  ad::Graph g;
  const std::vector<std::uint8_t> mask = {1, 0, 1};
  const auto w = values(g, attention_pool(g, p, "day", g.constant(h), mask).weights);
  CHECK(w[1] == 0.0);
  CHECK(w[0] + w[2] == doctest::Approx(1.0).epsilon(1e-15));
  const std::vector<std::uint8_t> none = {0, 0, 0};
  CHECK_THROWS(attention_pool(g, p, "day", g.constant(h), none));
}

TEST_CASE("forward: degenerate nesting has unit weights at every level") {
  for (std::size_t C : {2u, 3u, 5u}) {
    HanParams p = model(4, C, 15);
    std::mt19937_64 rng(16);
    const SampleInput s = random_sample(p, {1, 1, 1, 1}, rng);
    const Prediction pred = predict(p, s);
    REQUIRE(pred.logits.size() == C);
    for (double l : pred.logits) CHECK(std::isfinite(l));
    CHECK(pred.trace.day == std::vector<double>{1.0});
    CHECK(pred.trace.news[0] == std::vector<double>{1.0});
    CHECK(pred.trace.event[0][0] == std::vector<double>{1.0});
    CHECK(pred.trace.word[0][0][0] == std::vector<double>{1.0});
    CHECK(std::accumulate(pred.probabilities.begin(), pred.probabilities.end(), 0.0) ==
          doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("forward: attention weights are distributions at every level") {
  HanParams p = model(4, 5, 17);
  std::mt19937_64 rng(18);
  const SampleInput s = random_sample(p, {3, 2, 3, 4}, rng);
  const Prediction pred = predict(p, s);
  auto check = [](const std::vector<double>& beta) {
    for (double b : beta) CHECK(b >= 0.0);
    CHECK(std::abs(std::accumulate(beta.begin(), beta.end(), 0.0) - 1.0) < 1e-12);
  };
  check(pred.trace.day);
  for (const auto& n : pred.trace.news) check(n);
  for (const auto& day : pred.trace.event) {
    for (const auto& n : day) check(n);
  }
}

TEST_CASE("forward: appended padding leaves logits unchanged") {
  for (EmbedMode mode : {EmbedMode::word_compose, EmbedMode::precomputed}) {
    HanParams p = model(4, 3, 19, mode);
    std::mt19937_64 rng(20);
    const SampleInput s = random_sample(p, {2, 2, 2, 3}, rng);
    const auto base = logits_of(p, s);

    SampleInput padded = s;
    std::mt19937_64 junk(21);
    const SampleInput filler = random_sample(p, {1, 1, 1, 3}, junk);
    EventInput pad_event = filler.days[0].news[0].events[0];
    pad_event.pad = true;
    NewsInput pad_news = filler.days[0].news[0];
    pad_news.pad = true;
    DayInput pad_day = filler.days[0];
    pad_day.pad = true;
    for (auto& day : padded.days) {
      for (auto& news : day.news) {
        news.events.push_back(pad_event);
        if (mode == EmbedMode::word_compose) {
          for (auto& e : news.events) {
            if (e.pad) continue;
            e.token_mask.assign(e.tokens.size(), 1);
            e.tokens.push_back(3);
            e.token_mask.push_back(0);
          }
        }
      }
      day.news.push_back(pad_news);
    }
    padded.days.push_back(pad_day);
    padded.days.push_back(DayInput{"empty", {}, false});
    CHECK(max_abs_diff(logits_of(p, padded), base) < 1e-9);
  }
}

TEST_CASE("forward: gradients match finite differences on every parameter") {
  for (EmbedMode mode : {EmbedMode::word_compose, EmbedMode::precomputed}) {
    HanParams p = model(2, 3, 22, mode);
    std::mt19937_64 rng(23);
    const SampleInput s = random_sample(p, {2, 2, 2, 3}, rng);
    auto loss = [&] {
      ad::Graph g;
      return g.value(ad::softmax_cross_entropy(forward(g, p, s), static_cast<std::size_t>(s.label)))[0];
    };
    p.zero_grad();
    {
      ad::Graph g;
      g.backward(ad::softmax_cross_entropy(forward(g, p, s), static_cast<std::size_t>(s.label)));
    }
    double worst = 0.0;
    std::size_t checked = 0;
    for (auto& [name, t] : p.tensors) {
      const std::vector<double> grad(t.grad().begin(), t.grad().end());
      for (std::size_t i = 0; i < t.size(); ++i) {
        worst = std::max(worst, rel_error(grad[i], central_difference(t, i, loss)));
        ++checked;
      }
    }
    CHECK(checked == p.parameter_count());
    // The largest relative errors sit on gradients of order 1e-7, where
    // finite-difference rounding is about 1e-11 absolute.
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("embedding: all-OOV events are finite and deterministic") {
  HanParams p = model(3, 2, 24);
  EventInput e;
  e.tokens = {-1, -1, -1};
  ad::Graph g1, g2;
  const auto a = values(g1, embed_event(g1, p, e, nullptr));
  const auto b = values(g2, embed_event(g2, p, e, nullptr));
  for (double v : a) CHECK(std::isfinite(v));
  CHECK(bit_equal(a, b));
}

TEST_CASE("embedding: precomputed vectors pass through unchanged") {
  HanParams p = model(3, 2, 25, EmbedMode::precomputed);
  EventInput e;
  e.vector = {0.1, -1.0 / 3.0, 7.0};
  ad::Graph g;
  CHECK(values(g, embed_event(g, p, e, nullptr)) == e.vector);
  e.vector.pop_back();
  CHECK_THROWS_AS(embed_event(g, p, e, nullptr), ShapeError);
}

TEST_CASE("encoding: tokens, truncation and vector lookup") {
  NewsIndex news;
  news["n1"].timestamp = "2020-01-02T09:00:00Z";
  news["n1"].events = {{"n1", "2020-01-02T09:00:00Z", "The Board", "cut", "its dividend sharply today", 0},
                       {"n1", "2020-01-02T09:00:00Z", "Analysts", "expect", "", 0}};
  news["n1"].ordinals = {0, 1};
  DaySample ds;
  ds.date = *parse_date("2020-01-03");
  ds.asset = "X";
  ds.window = {{}, {"n1"}};

  const auto text = encode_sample_text(ds, news);
  std::vector<SampleInput> samples = {text};
  const auto vocab = build_vocabulary(samples);
  CHECK(vocab == std::vector<std::string>{"analysts", "board", "cut", "dividend", "expect", "its", "sharply", "the",
                                          "today"});
  HanParams p = init_params(tiny_config(3, 2), {"board", "cut", "the"}, 1);
  assign_tokens(samples, p);
  const auto& ev = samples[0].days[1].news[0].events;
  CHECK(samples[0].days[0].news.empty());
  CHECK(samples[0].days[1].date == "t-0");
  CHECK(ev[0].tokens == std::vector<std::int64_t>{2, 0, 1, -1});  // N = 4
  CHECK(ev[1].tokens == std::vector<std::int64_t>{-1, -1});

  HanParams pp = init_params(tiny_config(2, 2, EmbedMode::precomputed), {}, 1);
  EventVectorStore store(2);
  store.put({"n1", 0, 0}, {1.0, 2.0});
  const auto msg = message_of([&] { encode_sample(ds, news, pp, &store); });
  CHECK(msg.find("n1") != std::string::npos);
  store.put({"n1", 0, 1}, {3.0, 4.0});
  const auto enc = encode_sample(ds, news, pp, &store);
  CHECK(enc.days[1].news[0].events[1].vector == std::vector<double>{3.0, 4.0});

  ds.window = {{"missing"}};
  CHECK_THROWS_AS(encode_sample_text(ds, news), DataError);
}

TEST_CASE("checkpoint: round trip is bit exact and forward is unchanged") {
  HanParams p = model(3, 5, 26);
  const auto path = temp_path("ckpt.bin");
  save_checkpoint(p, path);
  HanParams q = load_checkpoint(path);
  CHECK(q.vocabulary == p.vocabulary);
  CHECK(q.config.categories == 5);
  REQUIRE(q.tensors.size() == p.tensors.size());
  for (const auto& [name, t] : p.tensors) {
    const auto a = t.values();
    const auto b = q.at(name).values();
    CHECK(bit_equal({a.begin(), a.end()}, {b.begin(), b.end()}));
  }
  std::mt19937_64 rng(27);
  const SampleInput s = random_sample(p, {2, 2, 2, 3}, rng);
  CHECK(bit_equal(logits_of(p, s), logits_of(q, s)));
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint: strict loading") {
  HanParams p = model(2, 2, 28);
  const auto path = temp_path("strict.bin");
  save_checkpoint(p, path);
  const Container good = read_container(path);

  Container extra = good;
  extra.tensors.push_back({"mlp.W3", Tensor({1})});
  write_container(path, extra);
  CHECK(message_of([&] { load_checkpoint(path); }).find("mlp.W3") != std::string::npos);

  Container missing = good;
  missing.tensors.pop_back();
  write_container(path, missing);
  CHECK(message_of([&] { load_checkpoint(path); }).find("missing") != std::string::npos);

  Container reshaped = good;
  reshaped.tensors.front().tensor = Tensor({1, 1});
  write_container(path, reshaped);
  CHECK(message_of([&] { load_checkpoint(path); }).find(good.tensors.front().name) != std::string::npos);

  Container wrong_kind = good;
  wrong_kind.kind = "event-vectors";
  write_container(path, wrong_kind);
  CHECK_THROWS_AS(load_checkpoint(path), DataError);

  save_checkpoint(p, path);
  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 3);
  CHECK_THROWS_AS(load_checkpoint(path), DataError);
  std::filesystem::remove(path);
}

TEST_CASE("explain: scores are the product of the three levels and sum to one") {
  HanParams p = model(4, 3, 29);
  std::mt19937_64 rng(30);
  const SampleInput s = random_sample(p, {3, 2, 3, 2}, rng);
  const Explanation all = explain(p, s, 1000);
  REQUIRE(all.events.size() == s.event_count());
  double total = 0.0;
  for (std::size_t i = 0; i < all.events.size(); ++i) {
    const auto& e = all.events[i];
    CHECK(e.score == e.beta_event * e.beta_news * e.beta_day);
    if (i > 0) CHECK(all.events[i - 1].score >= e.score);
    total += e.score;
  }
  CHECK(std::abs(total - 1.0) < 1e-9);

  const Explanation top = explain(p, s, 4);
  REQUIRE(top.events.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(top.events[i].score == all.events[i].score);

  const Explanation per_day = explain(p, s, 2, true);
  REQUIRE(per_day.events.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) CHECK(per_day.events[i].day == i / 2);
  CHECK(per_day.events[0].score >= per_day.events[1].score);
}

TEST_CASE("explain: a single event carries the whole weight") {
  HanParams p = model(3, 2, 31);
  std::mt19937_64 rng(32);
  const SampleInput s = random_sample(p, {1, 1, 1, 3}, rng);
  const Explanation ex = explain(p, s, 5, true);
  REQUIRE(ex.events.size() == 1);
  CHECK(ex.events[0].score == 1.0);
  CHECK(ex.events[0].news_id == "n0_0");
}
