#pragma once

// Loaders and writers for everything that crosses the process boundary:
// price series, GloVe embeddings, precomputed event vectors and the binary
// tensor container used by checkpoints.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "evhan/date.hpp"
#include "evhan/tensor.hpp"

namespace evhan {

struct PricePoint {
  Date date;
  double open = 0.0;
};

struct PriceSeries {
  std::string asset;
  std::vector<PricePoint> points;  // strictly increasing dates, positive prices

  std::optional<double> open_on(Date d) const;
};

/// CSV with header `date,open`. Rows may come in any order; the result is
/// sorted. Non-positive prices, duplicate dates and unparseable rows are
/// rejected with their line number.
PriceSeries parse_prices(std::istream& in, const std::string& asset, const std::string& source = "prices");
/// The asset id defaults to the file stem.
PriceSeries load_prices(const std::string& path, std::string asset = {});

enum class OovPolicy { zero, mean };

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t dim, OovPolicy policy = OovPolicy::zero) : dim_(dim), policy_(policy) {}

  void add(const std::string& token, std::span<const double> vec);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return tokens_.size(); }
  OovPolicy policy() const { return policy_; }
  void set_policy(OovPolicy p) { policy_ = p; }
  bool contains(const std::string& token) const { return index_.contains(token); }
  std::optional<std::size_t> index_of(const std::string& token) const;
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * dim_, dim_}; }

  /// Vector for token; absent tokens follow the OOV policy.
  std::vector<double> lookup(const std::string& token) const;

 private:
  std::size_t dim_ = 0;
  OovPolicy policy_ = OovPolicy::zero;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> values_;
};

/// GloVe text format: `token v1 ... vd` per line; d comes from the first line.
EmbeddingTable parse_glove(std::istream& in, OovPolicy policy = OovPolicy::zero);
EmbeddingTable load_glove(const std::string& path, OovPolicy policy = OovPolicy::zero);

// ---------------------------------------------------------------------------
// Binary tensor container
//
//   magic "EVHANBIN" | u32 version | str kind | u32 n_meta {str key, str value}
//   | u64 n_tensors { str name | u32 rank | u64 dims[rank] | f64 payload }
//
// All integers and doubles little-endian; str = u32 byte length + bytes.

inline constexpr char kContainerMagic[8] = {'E', 'V', 'H', 'A', 'N', 'B', 'I', 'N'};
inline constexpr std::uint32_t kContainerVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct Container {
  std::string kind;
  std::map<std::string, std::string> meta;
  std::vector<NamedTensor> tensors;
};

void write_container(std::ostream& out, const Container& c);
void write_container(const std::string& path, const Container& c);
Container read_container(std::istream& in);
Container read_container(const std::string& path);

// ---------------------------------------------------------------------------

struct EventKey {
  std::string news_id;
  int sentence_idx = 0;
  int ordinal = 0;  // position of the tuple among those of its sentence

  auto operator<=>(const EventKey&) const = default;
  bool operator==(const EventKey&) const = default;
};

std::string to_string(const EventKey& key);

/// Stand-in for contextual event encoders: one fixed vector per event.
class EventVectorStore {
 public:
  EventVectorStore() = default;
  explicit EventVectorStore(std::size_t dim) : dim_(dim) {}

  void put(const EventKey& key, std::vector<double> vec);
  const std::vector<double>* find(const EventKey& key) const;
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  const std::map<EventKey, std::vector<double>>& entries() const { return vectors_; }

  void save(const std::string& path) const;
  static EventVectorStore load(const std::string& path);

 private:
  std::size_t dim_ = 0;
  std::map<EventKey, std::vector<double>> vectors_;
};

}  // namespace evhan
