#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <bit>
#include <filesystem>
#include <functional>
#include <fstream>
#include <random>
#include <sstream>

#include "evhan/corpus_io.hpp"
#include "evhan/errors.hpp"

using namespace evhan;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("evhan_test_corpus_io_" + name)).string();
}

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

Container sample_container() {
  Container c;
  c.kind = "test";
  c.meta = {{"a", "1"}, {"b", "two words"}};
  Tensor t({2, 3});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::ldexp(1.0 + static_cast<double>(i), -3) - 0.1;
  Tensor v({1});
  v[0] = -0.0;
  c.tensors.push_back({"w", t});
  c.tensors.push_back({"v", v});
  return c;
}

std::string serialize(const Container& c) {
  std::ostringstream out(std::ios::binary);
  write_container(out, c);
  return out.str();
}

}  // namespace

TEST_CASE("prices: two rows parse into a series of length two") {
  std::istringstream in("date,open\n2013-02-22,1500.0\n2013-02-25,1515.0\n");
  const auto s = parse_prices(in, "SPX");
  REQUIRE(s.points.size() == 2);
  CHECK(s.points[0].open == 1500.0);
  CHECK(s.points[1].open == 1515.0);
  CHECK(s.open_on(*parse_date("2013-02-25")) == 1515.0);
  CHECK_FALSE(s.open_on(*parse_date("2013-02-23")).has_value());
}

TEST_CASE("prices: rows out of order come back sorted ascending") {
  std::istringstream in("date,open\n2013-02-25,1515.0\n2013-02-21,1490\n2013-02-22,1500.0\n");
  const auto s = parse_prices(in, "SPX");
  REQUIRE(s.points.size() == 3);
  CHECK(format_date(s.points[0].date) == "2013-02-21");
  CHECK(format_date(s.points[2].date) == "2013-02-25");
}

TEST_CASE("prices: malformed rows are rejected with their line number") {
  auto err = [](const std::string& text) {
    return message_of([&] {
      std::istringstream in(text);
      parse_prices(in, "X", "p.csv");
    });
  };
  CHECK(err("date,open\n2013-02-22,1500\n2013-02-25,0\n").find("p.csv:3") != std::string::npos);
  CHECK(err("date,open\n2013-02-22,1500\n2013-02-25,0\n").find("non-positive") != std::string::npos);
  CHECK(err("date,open\n2013-02-22,-1\n").find("p.csv:2") != std::string::npos);
  CHECK(err("date,open\n2013-02-22,1\n2013-02-22,2\n").find("duplicate") != std::string::npos);
  CHECK(err("date,open\n2013-02-30,1\n").find("date") != std::string::npos);
  CHECK(err("date,open\n2013-02-22,abc\n").find("price") != std::string::npos);
  CHECK(err("date,open\n2013-02-22,1,2\n").find("p.csv:2") != std::string::npos);
  CHECK(err("day,close\n").find("header") != std::string::npos);
  CHECK(err("").find("empty") != std::string::npos);
  CHECK_THROWS_AS(load_prices("/nonexistent/prices.csv"), DataError);
}

TEST_CASE("prices: the asset id defaults to the file stem") {
  const auto path = temp_path("ACME.csv");
  {
    std::ofstream out(path);
    out << "date,open\n2020-01-02,10\n";
  }
  CHECK(load_prices(path).asset == "evhan_test_corpus_io_ACME");
  CHECK(load_prices(path, "ACME").asset == "ACME");
  std::filesystem::remove(path);
}

TEST_CASE("glove: two lines of three floats") {
  std::istringstream in("the 0.1 0.2 0.3\nrose -1 0 1e-2\n");
  const auto t = parse_glove(in);
  CHECK(t.dim() == 3);
  CHECK(t.size() == 2);
  CHECK(t.lookup("rose") == std::vector<double>{-1.0, 0.0, 0.01});
  CHECK(t.lookup("absent") == std::vector<double>(3, 0.0));
}

TEST_CASE("glove: mean OOV policy averages every vector") {
  std::istringstream in("a 1 2\nb 3 -2\n");
  auto t = parse_glove(in, OovPolicy::mean);
  CHECK(t.lookup("zzz") == std::vector<double>{2.0, 0.0});
  t.set_policy(OovPolicy::zero);
  CHECK(t.lookup("zzz") == std::vector<double>{0.0, 0.0});
}

TEST_CASE("glove: inconsistent dimension and duplicates are errors") {
  std::istringstream bad("a 1 2 3\nb 1 2\n");
  const auto msg = message_of([&] { parse_glove(bad); });
  CHECK(msg.find("line 2") != std::string::npos);
  std::istringstream dup("a 1 2\na 3 4\n");
  CHECK_THROWS_AS(parse_glove(dup), DataError);
  std::istringstream junk("a 1 x\n");
  CHECK_THROWS_AS(parse_glove(junk), DataError);
  std::istringstream empty("");
  CHECK_THROWS_AS(parse_glove(empty), DataError);
}

TEST_CASE("glove: loading is independent of line order") {
  std::vector<std::string> lines = {"a 1 2", "b 3 4", "c 5 6", "d -1 -2"};
  auto load = [](const std::vector<std::string>& ls) {
    std::string text;
    for (const auto& l : ls) text += l + "\n";
    std::istringstream in(text);
    return parse_glove(in, OovPolicy::mean);
  };
  const auto base = load(lines);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    std::shuffle(lines.begin(), lines.end(), rng);
    const auto t = load(lines);
    for (const char* tok : {"a", "b", "c", "d", "oov"}) CHECK(t.lookup(tok) == base.lookup(tok));
  }
}

TEST_CASE("container: round trip is bit exact") {
  const Container c = sample_container();
  std::istringstream in(serialize(c), std::ios::binary);
  const Container r = read_container(in);
  CHECK(r.kind == c.kind);
  CHECK(r.meta == c.meta);
  REQUIRE(r.tensors.size() == 2);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(r.tensors[k].name == c.tensors[k].name);
    CHECK(r.tensors[k].tensor.shape() == c.tensors[k].tensor.shape());
    for (std::size_t i = 0; i < c.tensors[k].tensor.size(); ++i) {
      CHECK(std::bit_cast<std::uint64_t>(r.tensors[k].tensor[i]) ==
            std::bit_cast<std::uint64_t>(c.tensors[k].tensor[i]));
    }
  }
}

TEST_CASE("container: header layout is little-endian") {
  const std::string bytes = serialize(sample_container());
  CHECK(bytes.substr(0, 8) == "EVHANBIN");
  CHECK(static_cast<unsigned char>(bytes[8]) == 1);
  CHECK(bytes[9] == 0);
  CHECK(bytes[10] == 0);
  CHECK(bytes[11] == 0);
}

TEST_CASE("container: every truncation point is an error") {
  const std::string bytes = serialize(sample_container());
  for (std::size_t n = 0; n < bytes.size(); ++n) {
    std::istringstream in(bytes.substr(0, n), std::ios::binary);
    CHECK_THROWS_AS(read_container(in), DataError);
  }
}

TEST_CASE("container: bad magic, version and trailing bytes") {
  std::string bytes = serialize(sample_container());
  {
    std::string b = bytes;
    b[0] = 'X';
    std::istringstream in(b, std::ios::binary);
    CHECK(message_of([&] { read_container(in); }).find("magic") != std::string::npos);
  }
  {
    std::string b = bytes;
    b[8] = 2;
    std::istringstream in(b, std::ios::binary);
    CHECK(message_of([&] { read_container(in); }).find("version") != std::string::npos);
  }
  {
    std::istringstream in(bytes + "x", std::ios::binary);
    CHECK_THROWS_AS(read_container(in), DataError);
  }
}

TEST_CASE("event vectors: save and load") {
  EventVectorStore store(3);
  store.put({"n1", 0, 0}, {0.1, 0.2, 0.3});
  store.put({"n1", 0, 1}, {1.0, 2.0, 3.0});
  store.put({"n2", 4, 0}, {-1.0, 0.0, 1.0 / 3.0});
  CHECK_THROWS_AS(store.put({"n3", 0, 0}, {1.0}), DataError);
  const auto path = temp_path("vectors.bin");
  store.save(path);
  const auto loaded = EventVectorStore::load(path);
  CHECK(loaded.dim() == 3);
  CHECK(loaded.entries() == store.entries());
  REQUIRE(loaded.find({"n2", 4, 0}) != nullptr);
  CHECK((*loaded.find({"n2", 4, 0}))[2] == 1.0 / 3.0);
  CHECK(loaded.find({"n2", 4, 1}) == nullptr);
  std::filesystem::remove(path);
}

TEST_CASE("event vectors: a checkpoint file is not a vector store") {
  const auto path = temp_path("not_vectors.bin");
  write_container(path, sample_container());
  CHECK_THROWS_AS(EventVectorStore::load(path), DataError);
  std::filesystem::remove(path);
}
