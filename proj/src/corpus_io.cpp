#include "evhan/corpus_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "evhan/errors.hpp"

namespace evhan {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::string at_line(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line) + ": ";
}

// --- little-endian primitives ---------------------------------------------

template <typename U>
void put_le(std::ostream& out, U v) {
  unsigned char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFFu);
  out.write(reinterpret_cast<const char*>(buf), sizeof buf);
}

void put_str(std::ostream& out, const std::string& s) {
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void put_f64(std::ostream& out, double d) { put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(d)); }

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  void bytes(char* dst, std::size_t n, const char* what) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw DataError(std::string("truncated container while reading ") + what);
  }

  template <typename U>
  U le(const char* what) {
    unsigned char buf[sizeof(U)];
    bytes(reinterpret_cast<char*>(buf), sizeof buf, what);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
    return v;
  }

  std::string str(const char* what) {
    const auto n = le<std::uint32_t>(what);
    if (n > (1u << 30)) throw DataError(std::string("implausible string length in ") + what);
    std::string s(n, '\0');
    if (n) bytes(s.data(), n, what);
    return s;
  }

  double f64(const char* what) { return std::bit_cast<double>(le<std::uint64_t>(what)); }

  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::istream& in_;
};

}  // namespace

// --- prices ----------------------------------------------------------------

std::optional<double> PriceSeries::open_on(Date d) const {
  auto it = std::lower_bound(points.begin(), points.end(), d,
                             [](const PricePoint& p, Date x) { return to_days(p.date) < to_days(x); });
  if (it == points.end() || it->date != d) return std::nullopt;
  return it->open;
}

PriceSeries parse_prices(std::istream& in, const std::string& asset, const std::string& source) {
  PriceSeries series;
  series.asset = asset;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::set<int> seen_days;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = trim(line);
    if (row.empty()) continue;
    if (!header_seen) {
      std::string h(row);
      h.erase(std::remove_if(h.begin(), h.end(), [](char c) { return c == ' ' || c == '\t'; }), h.end());
      if (h.rfind("\xEF\xBB\xBF", 0) == 0) h.erase(0, 3);
      if (h != "date,open") throw DataError(at_line(source, line_no) + "expected header 'date,open'");
      header_seen = true;
      continue;
    }
    const auto comma = row.find(',');
    if (comma == std::string_view::npos || row.find(',', comma + 1) != std::string_view::npos) {
      throw DataError(at_line(source, line_no) + "expected two fields 'date,open'");
    }
    const auto date = parse_date(trim(row.substr(0, comma)));
    if (!date) throw DataError(at_line(source, line_no) + "unparseable date");
    const auto open = parse_double(row.substr(comma + 1));
    if (!open || !std::isfinite(*open)) throw DataError(at_line(source, line_no) + "unparseable price");
    if (*open <= 0.0) throw DataError(at_line(source, line_no) + "non-positive price");
    const int day = to_days(*date).time_since_epoch().count();
    if (!seen_days.insert(day).second) {
      throw DataError(at_line(source, line_no) + "duplicate date " + format_date(*date));
    }
    series.points.push_back({*date, *open});
  }
  if (!header_seen) throw DataError(source + ": empty price file");
  std::sort(series.points.begin(), series.points.end(),
            [](const PricePoint& a, const PricePoint& b) { return to_days(a.date) < to_days(b.date); });
  return series;
}

PriceSeries load_prices(const std::string& path, std::string asset) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open price file: " + path);
  if (asset.empty()) asset = std::filesystem::path(path).stem().string();
  return parse_prices(in, asset, path);
}

// --- embeddings ------------------------------------------------------------

void EmbeddingTable::add(const std::string& token, std::span<const double> vec) {
  if (vec.size() != dim_) {
    throw DataError("embedding for '" + token + "' has dimension " + std::to_string(vec.size()) + ", expected " +
                    std::to_string(dim_));
  }
  if (!index_.emplace(token, tokens_.size()).second) throw DataError("duplicate embedding token '" + token + "'");
  tokens_.push_back(token);
  values_.insert(values_.end(), vec.begin(), vec.end());
}

std::optional<std::size_t> EmbeddingTable::index_of(const std::string& token) const {
  if (auto it = index_.find(token); it != index_.end()) return it->second;
  return std::nullopt;
}

std::vector<double> EmbeddingTable::lookup(const std::string& token) const {
  if (auto i = index_of(token)) {
    const auto r = row(*i);
    return {r.begin(), r.end()};
  }
  std::vector<double> out(dim_, 0.0);
  if (policy_ == OovPolicy::mean && !tokens_.empty()) {
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      for (std::size_t k = 0; k < dim_; ++k) out[k] += values_[i * dim_ + k];
    }
    for (auto& v : out) v /= static_cast<double>(tokens_.size());
  }
  return out;
}

EmbeddingTable parse_glove(std::istream& in, OovPolicy policy) {
  EmbeddingTable table;
  bool first = true;
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> vec;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view rest = trim(line);
    if (rest.empty()) continue;
    const auto sp = rest.find_first_of(" \t");
    if (sp == std::string_view::npos) throw DataError("glove line " + std::to_string(line_no) + ": no vector");
    const std::string token(rest.substr(0, sp));
    rest.remove_prefix(sp);
    vec.clear();
    while (true) {
      const auto b = rest.find_first_not_of(" \t");
      if (b == std::string_view::npos) break;
      rest.remove_prefix(b);
      const auto e = std::min(rest.find_first_of(" \t"), rest.size());
      const auto v = parse_double(rest.substr(0, e));
      if (!v) throw DataError("glove line " + std::to_string(line_no) + ": unparseable value");
      vec.push_back(*v);
      rest.remove_prefix(e);
    }
    if (first) {
      if (vec.empty()) throw DataError("glove line " + std::to_string(line_no) + ": no vector");
      table = EmbeddingTable(vec.size(), policy);
      first = false;
    } else if (vec.size() != table.dim()) {
      throw DataError("glove line " + std::to_string(line_no) + ": dimension " + std::to_string(vec.size()) +
                      " differs from " + std::to_string(table.dim()));
    }
    try {
      table.add(token, vec);
    } catch (const DataError& e) {
      throw DataError("glove line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (first) throw DataError("empty embedding file");
  return table;
}

EmbeddingTable load_glove(const std::string& path, OovPolicy policy) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embedding file: " + path);
  return parse_glove(in, policy);
}

// --- container -------------------------------------------------------------

void write_container(std::ostream& out, const Container& c) {
  out.write(kContainerMagic, sizeof kContainerMagic);
  put_le<std::uint32_t>(out, kContainerVersion);
  put_str(out, c.kind);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.meta.size()));
  for (const auto& [k, v] : c.meta) {
    put_str(out, k);
    put_str(out, v);
  }
  put_le<std::uint64_t>(out, c.tensors.size());
  for (const auto& t : c.tensors) {
    put_str(out, t.name);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.tensor.rank()));
    for (auto d : t.tensor.shape()) put_le<std::uint64_t>(out, d);
    for (double v : t.tensor.values()) put_f64(out, v);
  }
}

void write_container(const std::string& path, const Container& c) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path);
  write_container(out, c);
  out.flush();
  if (!out) throw DataError("failed writing " + path);
}

Container read_container(std::istream& in) {
  Reader r(in);
  char magic[sizeof kContainerMagic];
  r.bytes(magic, sizeof magic, "magic");
  if (std::memcmp(magic, kContainerMagic, sizeof magic) != 0) throw DataError("bad magic: not an evhan container");
  const auto version = r.le<std::uint32_t>("version");
  if (version != kContainerVersion) {
    throw DataError("unsupported container version " + std::to_string(version));
  }
  Container c;
  c.kind = r.str("kind");
  const auto n_meta = r.le<std::uint32_t>("meta count");
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    auto k = r.str("meta key");
    c.meta[std::move(k)] = r.str("meta value");
  }
  const auto n_tensors = r.le<std::uint64_t>("tensor count");
  for (std::uint64_t i = 0; i < n_tensors; ++i) {
    NamedTensor nt;
    nt.name = r.str("tensor name");
    const auto rank = r.le<std::uint32_t>("tensor rank");
    if (rank == 0 || rank > 8) throw DataError("tensor '" + nt.name + "' has invalid rank " + std::to_string(rank));
    Shape shape(rank);
    std::uint64_t total = 1;
    for (auto& d : shape) {
      const auto v = r.le<std::uint64_t>("tensor dims");
      if (v == 0 || v > (1ull << 32)) throw DataError("tensor '" + nt.name + "' has invalid extent");
      d = static_cast<std::size_t>(v);
      total *= v;
      if (total > (1ull << 34)) throw DataError("tensor '" + nt.name + "' is implausibly large");
    }
    std::vector<double> values(static_cast<std::size_t>(total));
    for (auto& v : values) v = r.f64("tensor payload");
    nt.tensor = Tensor(std::move(shape), std::move(values));
    c.tensors.push_back(std::move(nt));
  }
  if (!r.at_end()) throw DataError("trailing bytes after container payload");
  return c;
}

Container read_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open container: " + path);
  return read_container(in);
}

// --- event vectors ---------------------------------------------------------

std::string to_string(const EventKey& key) {
  return key.news_id + "\t" + std::to_string(key.sentence_idx) + "\t" + std::to_string(key.ordinal);
}

void EventVectorStore::put(const EventKey& key, std::vector<double> vec) {
  if (dim_ == 0 && vectors_.empty()) dim_ = vec.size();
  if (vec.size() != dim_ || dim_ == 0) {
    throw DataError("event vector for " + to_string(key) + " has dimension " + std::to_string(vec.size()) +
                    ", expected " + std::to_string(dim_));
  }
  vectors_[key] = std::move(vec);
}

const std::vector<double>* EventVectorStore::find(const EventKey& key) const {
  auto it = vectors_.find(key);
  return it == vectors_.end() ? nullptr : &it->second;
}

void EventVectorStore::save(const std::string& path) const {
  Container c;
  c.kind = "event-vectors";
  c.meta["dim"] = std::to_string(dim_);
  for (const auto& [key, vec] : vectors_) c.tensors.push_back({to_string(key), Tensor({dim_}, vec)});
  write_container(path, c);
}

EventVectorStore EventVectorStore::load(const std::string& path) {
  const Container c = read_container(path);
  if (c.kind != "event-vectors") throw DataError(path + ": container holds '" + c.kind + "', not event vectors");
  std::size_t dim = 0;
  if (auto it = c.meta.find("dim"); it != c.meta.end()) dim = std::stoul(it->second);
  EventVectorStore store(dim);
  for (const auto& nt : c.tensors) {
    const auto t1 = nt.name.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : nt.name.find('\t', t1 + 1);
    if (t2 == std::string::npos) throw DataError(path + ": malformed event key '" + nt.name + "'");
    EventKey key;
    key.news_id = nt.name.substr(0, t1);
    try {
      key.sentence_idx = std::stoi(nt.name.substr(t1 + 1, t2 - t1 - 1));
      key.ordinal = std::stoi(nt.name.substr(t2 + 1));
    } catch (const std::exception&) {
      throw DataError(path + ": malformed event key '" + nt.name + "'");
    }
    if (nt.tensor.rank() != 1) throw DataError(path + ": event vector " + nt.name + " is not rank 1");
    store.put(key, {nt.tensor.values().begin(), nt.tensor.values().end()});
  }
  return store;
}

}  // namespace evhan
