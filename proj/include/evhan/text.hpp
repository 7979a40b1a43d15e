#pragma once

// Event extraction from news text: tokenization and tagging, ReVerb-style
// relation phrases, rule-based pronoun resolution, and the merge step that
// rewrites pronoun arguments into coreference-free events.

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "evhan/events.hpp"

namespace evhan::text {

enum class Tag { VERB, NOUN, PRON, ADJ, ADV, DET, PREP, PART, NUM, PUNCT, OTHER };

std::string_view tag_name(Tag t);

struct TokenizedSentence {
  std::vector<std::string> tokens;
  std::vector<Tag> tags;
  std::vector<std::size_t> offsets;  // byte offset of each token in the document
  int sentence_index = 0;
};

/// Half-open token range within one sentence.
struct Span {
  int sentence = 0;
  std::size_t begin = 0;
  std::size_t end = 0;

  bool empty() const { return begin == end; }
  friend bool operator==(const Span&, const Span&) = default;
};

struct Mention {
  std::string text;
  Span span;
};

struct CorefChain {
  Mention representative;
  std::vector<Span> members;
};

/// Extraction output that still knows where its parts sit in the sentence.
struct RawTuple {
  EventTuple event;
  Span a1;
  Span p;
  Span a2;
  std::size_t predicate_offset = 0;  // byte offset of the predicate start
};

struct ExtractOptions {
  // ReVerb lexical constraint: keep a relation phrase only if it occurs at
  // least this many times in the corpus. 0 disables the filter.
  std::size_t lexical_min_occurrences = 0;
};

std::vector<TokenizedSentence> tokenize_and_tag(std::string_view document);

/// Relation phrases of one sentence with their nearest argument chunks.
std::vector<RawTuple> extract_reverb(const TokenizedSentence& sentence);

std::vector<CorefChain> resolve_coref(const std::vector<TokenizedSentence>& sentences);

/// Replaces whole-slot pronoun arguments by their chain representative
/// (lowercased). Count and predicates are preserved; output is ordered by
/// sentence then predicate offset.
std::vector<EventTuple> merge_and_rewrite(std::vector<RawTuple> tuples, const std::vector<CorefChain>& chains);

/// Full per-document pipeline: tag, extract and resolve, then merge.
std::vector<EventTuple> extract_document(std::string_view body, const std::string& news_id,
                                         const std::string& timestamp);

/// Noun-phrase chunks of a sentence (maximal DET/ADJ/NUM/NOUN/PRON runs that
/// end in NOUN or PRON).
std::vector<Span> noun_chunks(const TokenizedSentence& sentence);

std::string span_text(const TokenizedSentence& sentence, Span span);

// ---------------------------------------------------------------------------
// Corpus-level extraction.

struct NewsRecord {
  std::string id;
  std::string timestamp;
  std::string source;
  std::string title;
  std::string body;
};

/// One column of the corpus statistics table.
struct SplitStats {
  std::size_t news_days = 0;
  std::size_t news = 0;
  std::size_t sentences = 0;
  std::size_t words = 0;
  std::size_t events = 0;
  std::size_t words_in_events = 0;

  double news_per_day() const { return news_days ? static_cast<double>(news) / news_days : 0.0; }
  double events_per_news() const { return news ? static_cast<double>(events) / news : 0.0; }
  double events_per_day() const { return news_days ? static_cast<double>(events) / news_days : 0.0; }
  double words_per_event() const { return events ? static_cast<double>(words_in_events) / events : 0.0; }
};

/// Named calendar range used to bucket statistics (inclusive bounds, ISO dates).
struct DateRange {
  std::string name;
  std::string first;
  std::string last;
};

struct CorpusStats {
  std::vector<std::string> split_names;
  std::map<std::string, SplitStats> splits;
  std::size_t skipped_records = 0;
  std::vector<std::string> warnings;
};

/// Streams JSON Lines news records, writes one events JSON line per tuple and
/// returns statistics. Malformed records are skipped with a warning.
CorpusStats extract_corpus(std::istream& news, std::ostream& events_out, const ExtractOptions& options = {},
                           const std::vector<DateRange>& splits = {});

std::string stats_to_json(const CorpusStats& stats);

}  // namespace evhan::text
