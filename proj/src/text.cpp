#include "evhan/text.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "evhan/date.hpp"
#include "lexicon.hpp"

namespace evhan::text {
namespace {

bool is_alnum(unsigned char c) { return std::isalnum(c) != 0; }
bool is_alpha(unsigned char c) { return std::isalpha(c) != 0; }
bool is_digit(unsigned char c) { return std::isdigit(c) != 0; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Multi-byte UTF-8 punctuation that should not glue onto words.
enum class Special { none, apostrophe, quote, dash, ellipsis };

Special special_at(std::string_view t, std::size_t i, std::size_t& len) {
  len = 1;
  if (t[i] == '\'') return Special::apostrophe;
  if (static_cast<unsigned char>(t[i]) == 0xE2 && i + 2 < t.size() &&
      static_cast<unsigned char>(t[i + 1]) == 0x80) {
    len = 3;
    switch (static_cast<unsigned char>(t[i + 2])) {
      case 0x98:
      case 0x99:
        return Special::apostrophe;
      case 0x9C:
      case 0x9D:
        return Special::quote;
      case 0x93:
      case 0x94:
        return Special::dash;
      case 0xA6:
        return Special::ellipsis;
      default:
        break;
    }
  }
  len = 1;
  return Special::none;
}

bool is_word_byte(std::string_view t, std::size_t i) {
  const auto c = static_cast<unsigned char>(t[i]);
  if (is_alnum(c)) return true;
  if (c < 0x80) return false;
  std::size_t len = 0;
  return special_at(t, i, len) == Special::none;
}

struct RawToken {
  std::string text;
  std::size_t offset;
};

// Clitic suffixes split off after an apostrophe.
std::size_t clitic_length(std::string_view t, std::size_t after) {
  static const std::string_view clitics[] = {"re", "ve", "ll", "s", "d", "m"};
  for (auto c : clitics) {
    if (t.substr(after, c.size()).size() != c.size()) continue;
    if (lower(t.substr(after, c.size())) != c) continue;
    const std::size_t end = after + c.size();
    if (end == t.size() || !is_word_byte(t, end)) return c.size();
  }
  return 0;
}

std::vector<RawToken> tokenize(std::string_view t) {
  std::vector<RawToken> out;
  std::size_t i = 0;
  const std::size_t n = t.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(t[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    std::size_t sp_len = 0;
    const Special sp = special_at(t, i, sp_len);
    if (sp == Special::apostrophe) {
      // 's 're ... attach as their own token; a bare apostrophe is its own token.
      const std::size_t cl = clitic_length(t, i + sp_len);
      const bool after_word = !out.empty() && out.back().offset + out.back().text.size() == i;
      if (cl > 0 && after_word) {
        out.push_back({"'" + std::string(t.substr(i + sp_len, cl)), i});
        i += sp_len + cl;
      } else {
        out.push_back({"'", i});
        i += sp_len;
      }
      continue;
    }
    if (sp != Special::none) {
      out.push_back({sp == Special::quote ? "\"" : sp == Special::dash ? "--" : "...", i});
      i += sp_len;
      continue;
    }
    if (!is_word_byte(t, i)) {
      out.push_back({std::string(1, t[i]), i});
      ++i;
      continue;
    }
    // Letter-period abbreviations such as U.S. or J.
    if (is_alpha(c) && i + 1 < n && t[i + 1] == '.') {
      std::size_t j = i;
      while (j + 1 < n && is_alpha(static_cast<unsigned char>(t[j])) && t[j + 1] == '.' &&
             (j == i || t[j - 1] == '.')) {
        j += 2;
      }
      const std::size_t letters = (j - i) / 2;
      if (letters >= 2 || std::isupper(c)) {
        if (j >= n || !is_word_byte(t, j)) {
          out.push_back({std::string(t.substr(i, j - i)), i});
          i = j;
          continue;
        }
      }
    }
    std::size_t j = i;
    while (j < n) {
      if (is_word_byte(t, j)) {
        // n't splits off the verb it is attached to
        if (t[j] == 'n' || t[j] == 'N') {
          std::size_t al = 0;
          if (j + 1 < n && special_at(t, j + 1, al) == Special::apostrophe && j + 1 + al < n &&
              (t[j + 1 + al] == 't' || t[j + 1 + al] == 'T') &&
              (j + 2 + al == n || !is_word_byte(t, j + 2 + al)) && j > i) {
            break;
          }
        }
        ++j;
        continue;
      }
      const char ch = t[j];
      const bool inner = j > i && j + 1 < n;
      if (inner && (ch == '-' || ch == '&') && is_word_byte(t, j + 1) && is_word_byte(t, j - 1)) {
        ++j;
        continue;
      }
      if (inner && (ch == '.' || ch == ',') && is_digit(static_cast<unsigned char>(t[j - 1])) &&
          is_digit(static_cast<unsigned char>(t[j + 1]))) {
        ++j;
        continue;
      }
      break;
    }
    if (j < n && t[j] == '.' && lexicon::is_abbreviation(lower(t.substr(i, j - i + 1)))) ++j;
    out.push_back({std::string(t.substr(i, j - i)), i});
    i = j;
    if (i < n && (t[i] == 'n' || t[i] == 'N')) {
      std::size_t al = 0;
      if (i + 1 < n && special_at(t, i + 1, al) == Special::apostrophe) {
        out.push_back({"n't", i});
        i += 1 + al + 1;
      }
    }
  }
  return out;
}

bool is_terminal(std::string_view tok) { return tok == "." || tok == "!" || tok == "?" || tok == "..."; }
bool is_closer(std::string_view tok) { return tok == "\"" || tok == ")" || tok == "'" || tok == "]"; }

bool has_alnum(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) { return is_alnum(static_cast<unsigned char>(c)); });
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

enum class Pending { none, hyphen, ing, ed };

void tag_sentence(TokenizedSentence& s) {
  const std::size_t n = s.tokens.size();
  s.tags.assign(n, Tag::NOUN);
  std::vector<Pending> pending(n, Pending::none);
  std::vector<std::string> low(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string& tok = s.tokens[i];
    low[i] = lower(tok);
    const auto first = static_cast<unsigned char>(tok[0]);
    if (auto hit = lexicon::lookup(low[i])) {
      s.tags[i] = *hit;
    } else if (!has_alnum(tok)) {
      s.tags[i] = Tag::PUNCT;
    } else if (tok.find('-') != std::string::npos && tok.front() != '-') {
      pending[i] = Pending::hyphen;
    } else if (is_digit(first)) {
      s.tags[i] = Tag::NUM;
    } else if (std::isupper(first)) {
      s.tags[i] = Tag::NOUN;
    } else if (tok.size() > 3 && ends_with(low[i], "ly")) {
      s.tags[i] = Tag::ADV;
    } else if (tok.size() > 4 && ends_with(low[i], "ing")) {
      pending[i] = Pending::ing;
    } else if (tok.size() > 3 && ends_with(low[i], "ed")) {
      pending[i] = Pending::ed;
    }
  }

  auto prev_is_aux = [&](std::size_t i) {
    std::size_t k = i;
    while (k > 0 && s.tags[k - 1] == Tag::ADV) --k;
    return k > 0 && lexicon::is_auxiliary(low[k - 1]);
  };
  auto nounish = [&](std::size_t i) {
    return i < n && (s.tags[i] == Tag::NOUN || s.tags[i] == Tag::ADJ || s.tags[i] == Tag::NUM ||
                     pending[i] == Pending::hyphen);
  };

  for (std::size_t i = 0; i < n; ++i) {
    const Tag prev = i > 0 ? s.tags[i - 1] : Tag::PUNCT;
    switch (pending[i]) {
      case Pending::ing:
        if (prev_is_aux(i) || prev == Tag::NOUN || prev == Tag::PRON) {
          s.tags[i] = Tag::VERB;
        } else if (prev == Tag::DET || prev == Tag::ADJ) {
          s.tags[i] = Tag::ADJ;
        } else {
          s.tags[i] = Tag::NOUN;
        }
        pending[i] = Pending::none;
        break;
      case Pending::ed:
        if (prev_is_aux(i) || prev == Tag::NOUN || prev == Tag::PRON) {
          s.tags[i] = Tag::VERB;
        } else {
          s.tags[i] = (i + 1 < n && s.tags[i + 1] == Tag::NOUN) ? Tag::ADJ : Tag::VERB;
        }
        pending[i] = Pending::none;
        break;
      default:
        break;
    }
  }
  for (std::size_t i = n; i-- > 0;) {
    if (pending[i] == Pending::hyphen) {
      s.tags[i] = nounish(i + 1) ? Tag::ADJ : Tag::NOUN;
      pending[i] = Pending::none;
    }
  }

  static const std::set<std::string, std::less<>> subjects = {"that", "this", "it",   "there", "what",
                                                               "who",  "here", "he", "she"};
  for (std::size_t i = 0; i < n; ++i) {
    if (low[i] == "'s") {
      s.tags[i] = (i > 0 && (s.tags[i - 1] == Tag::PRON || subjects.contains(low[i - 1]))) ? Tag::VERB : Tag::PART;
    } else if (low[i] == "'") {
      s.tags[i] = Tag::PART;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::string& w = low[i];
    const Tag next = i + 1 < n ? s.tags[i + 1] : Tag::PUNCT;
    if (w == "this" || w == "that" || w == "these" || w == "those") {
      if (next == Tag::NOUN || next == Tag::ADJ || next == Tag::NUM) {
        s.tags[i] = Tag::DET;
      } else if (w == "that" && (next == Tag::DET || next == Tag::OTHER)) {
        s.tags[i] = Tag::OTHER;
      } else {
        s.tags[i] = Tag::PRON;
      }
    } else if (w == "to") {
      s.tags[i] = next == Tag::VERB ? Tag::PART : Tag::PREP;
    }
  }
}

bool is_w(Tag t) {
  return t == Tag::NOUN || t == Tag::ADJ || t == Tag::ADV || t == Tag::DET || t == Tag::PRON;
}
bool is_p(Tag t) { return t == Tag::PREP || t == Tag::PART; }
bool is_chunk_tag(Tag t) {
  return t == Tag::DET || t == Tag::ADJ || t == Tag::NUM || t == Tag::NOUN || t == Tag::PRON;
}

// Longest relation phrase starting at a verb: V | V P | V W* P with
// V = verb particle? adverb?.
std::size_t relation_end(const TokenizedSentence& s, std::size_t i) {
  const auto& tg = s.tags;
  const std::size_t n = tg.size();
  std::size_t v_end = i + 1;
  if (v_end < n && tg[v_end] == Tag::PART && !(v_end + 1 < n && tg[v_end + 1] == Tag::VERB)) ++v_end;
  if (v_end < n && tg[v_end] == Tag::ADV) ++v_end;
  std::size_t best = v_end;
  if (v_end < n && is_p(tg[v_end])) best = v_end + 1;
  std::size_t k = v_end;
  while (k < n && is_w(tg[k])) ++k;
  if (k > v_end && k < n && is_p(tg[k])) best = std::max(best, k + 1);
  return best;
}

std::vector<std::pair<std::size_t, std::size_t>> relation_spans(const TokenizedSentence& s) {
  std::vector<std::pair<std::size_t, std::size_t>> rels;
  std::size_t i = 0;
  while (i < s.tags.size()) {
    if (s.tags[i] != Tag::VERB) {
      ++i;
      continue;
    }
    const std::size_t end = relation_end(s, i);
    if (!rels.empty() && rels.back().second == i) {
      rels.back().second = end;
    } else {
      rels.emplace_back(i, end);
    }
    i = end;
  }
  return rels;
}

bool is_proper_token(const TokenizedSentence& s, std::size_t i) {
  const std::string& tok = s.tokens[i];
  if (s.tags[i] != Tag::NOUN || !std::isupper(static_cast<unsigned char>(tok[0]))) return false;
  if (i == 0 && lexicon::lookup(lower(tok))) return false;
  return true;
}

}  // namespace

std::string_view tag_name(Tag t) {
  switch (t) {
    case Tag::VERB: return "VERB";
    case Tag::NOUN: return "NOUN";
    case Tag::PRON: return "PRON";
    case Tag::ADJ: return "ADJ";
    case Tag::ADV: return "ADV";
    case Tag::DET: return "DET";
    case Tag::PREP: return "PREP";
    case Tag::PART: return "PART";
    case Tag::NUM: return "NUM";
    case Tag::PUNCT: return "PUNCT";
    case Tag::OTHER: return "OTHER";
  }
  return "OTHER";
}

std::vector<TokenizedSentence> tokenize_and_tag(std::string_view document) {
  std::vector<TokenizedSentence> sentences;
  TokenizedSentence cur;
  const std::vector<RawToken> toks = tokenize(document);
  auto flush = [&] {
    if (cur.tokens.empty()) return;
    cur.sentence_index = static_cast<int>(sentences.size());
    tag_sentence(cur);
    sentences.push_back(std::move(cur));
    cur = TokenizedSentence{};
  };
  for (std::size_t i = 0; i < toks.size(); ++i) {
    cur.tokens.push_back(toks[i].text);
    cur.offsets.push_back(toks[i].offset);
    if (is_terminal(toks[i].text)) {
      while (i + 1 < toks.size() && is_closer(toks[i + 1].text)) {
        ++i;
        cur.tokens.push_back(toks[i].text);
        cur.offsets.push_back(toks[i].offset);
      }
      flush();
    }
  }
  flush();
  return sentences;
}

std::vector<Span> noun_chunks(const TokenizedSentence& s) {
  std::vector<Span> chunks;
  const std::size_t n = s.tags.size();
  std::size_t i = 0;
  while (i < n) {
    if (!is_chunk_tag(s.tags[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && is_chunk_tag(s.tags[j])) ++j;
    std::size_t end = j;
    while (end > i && s.tags[end - 1] != Tag::NOUN && s.tags[end - 1] != Tag::PRON) --end;
    if (end > i) chunks.push_back({s.sentence_index, i, end});
    i = j;
  }
  return chunks;
}

std::string span_text(const TokenizedSentence& s, Span span) {
  std::string out;
  for (std::size_t i = span.begin; i < span.end; ++i) {
    if (!out.empty()) out += ' ';
    out += s.tokens[i];
  }
  return out;
}

std::vector<RawTuple> extract_reverb(const TokenizedSentence& s) {
  std::vector<RawTuple> out;
  const auto rels = relation_spans(s);
  const auto chunks = noun_chunks(s);
  auto relation_between = [&](std::size_t from, std::size_t to) {
    return std::any_of(rels.begin(), rels.end(),
                       [&](const auto& r) { return r.first >= from && r.first < to; });
  };
  for (const auto& [rb, re] : rels) {
    // a1: nearest chunk ending at or before the relation, extended over
    // coordinations ("equities and bonds").
    const Span* a1 = nullptr;
    for (const Span& c : chunks) {
      if (c.end <= rb && !relation_between(c.end, rb)) a1 = &c;
    }
    if (a1 == nullptr) continue;
    Span a1_span = *a1;
    for (bool extended = true; extended;) {
      extended = false;
      if (a1_span.begin < 2) break;
      const std::string conj = lower(s.tokens[a1_span.begin - 1]);
      if (conj != "and" && conj != "or") break;
      for (const Span& c : chunks) {
        if (c.end == a1_span.begin - 1) {
          a1_span.begin = c.begin;
          extended = true;
          break;
        }
      }
    }
    Span a2_span{s.sentence_index, re, re};
    for (const Span& c : chunks) {
      if (c.begin < re) continue;
      bool blocked = relation_between(re, c.begin);
      for (std::size_t k = re; !blocked && k < c.begin; ++k) blocked = s.tags[k] == Tag::PUNCT;
      if (!blocked) a2_span = c;
      break;
    }
    RawTuple t;
    t.a1 = a1_span;
    t.p = {s.sentence_index, rb, re};
    t.a2 = a2_span;
    t.predicate_offset = s.offsets[rb];
    t.event.a1 = span_text(s, a1_span);
    t.event.p = span_text(s, t.p);
    t.event.a2 = span_text(s, a2_span);
    t.event.sentence_idx = s.sentence_index;
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<CorefChain> resolve_coref(const std::vector<TokenizedSentence>& sentences) {
  constexpr int kWindow = 2;  // sentences looked back beyond the pronoun's own
  // Capitalized noun-phrase mentions per sentence, left to right.
  std::vector<std::vector<Span>> mentions(sentences.size());
  for (std::size_t si = 0; si < sentences.size(); ++si) {
    const auto& s = sentences[si];
    for (const Span& c : noun_chunks(s)) {
      if (s.tags[c.end - 1] == Tag::PRON) continue;
      for (std::size_t k = c.begin; k < c.end; ++k) {
        if (is_proper_token(s, k)) {
          mentions[si].push_back(c);
          break;
        }
      }
    }
  }

  std::vector<CorefChain> chains;
  auto chain_for = [&](const Span& rep) -> CorefChain& {
    for (auto& c : chains) {
      if (c.representative.span == rep) return c;
    }
    const auto& s = sentences[static_cast<std::size_t>(rep.sentence)];
    chains.push_back({{span_text(s, rep), rep}, {}});
    return chains.back();
  };

  for (std::size_t si = 0; si < sentences.size(); ++si) {
    const auto& s = sentences[si];
    for (std::size_t k = 0; k < s.tokens.size(); ++k) {
      if (s.tags[k] != Tag::PRON || !lexicon::is_resolvable_pronoun(lower(s.tokens[k]))) continue;
      const Span* found = nullptr;
      // Own sentence: closest mention to the left.
      for (const Span& m : mentions[si]) {
        if (m.end <= k) found = &m;
      }
      // Earlier sentences: nearest sentence first, leftmost mention first.
      for (int back = 1; found == nullptr && back <= kWindow; ++back) {
        const int prev = static_cast<int>(si) - back;
        if (prev < 0) break;
        if (!mentions[static_cast<std::size_t>(prev)].empty()) found = &mentions[static_cast<std::size_t>(prev)].front();
      }
      if (found == nullptr) continue;
      chain_for(*found).members.push_back({s.sentence_index, k, k + 1});
    }
  }
  std::sort(chains.begin(), chains.end(), [](const CorefChain& a, const CorefChain& b) {
    return std::tie(a.representative.span.sentence, a.representative.span.begin) <
           std::tie(b.representative.span.sentence, b.representative.span.begin);
  });
  return chains;
}

std::vector<EventTuple> merge_and_rewrite(std::vector<RawTuple> tuples, const std::vector<CorefChain>& chains) {
  auto representative_for = [&](const Span& slot) -> const std::string* {
    if (slot.end != slot.begin + 1) return nullptr;
    for (const auto& c : chains) {
      for (const Span& m : c.members) {
        if (m == slot) return &c.representative.text;
      }
    }
    return nullptr;
  };
  std::stable_sort(tuples.begin(), tuples.end(), [](const RawTuple& a, const RawTuple& b) {
    return std::tie(a.event.sentence_idx, a.predicate_offset) < std::tie(b.event.sentence_idx, b.predicate_offset);
  });
  std::vector<EventTuple> out;
  out.reserve(tuples.size());
  for (auto& t : tuples) {
    if (const std::string* rep = representative_for(t.a1)) t.event.a1 = lower(*rep);
    if (!t.a2.empty()) {
      if (const std::string* rep = representative_for(t.a2)) t.event.a2 = lower(*rep);
    }
    out.push_back(std::move(t.event));
  }
  return out;
}

namespace {

std::vector<EventTuple> extract_sentences(const std::vector<TokenizedSentence>& sentences, const std::string& news_id,
                                          const std::string& timestamp) {
  std::vector<RawTuple> raw;
  for (const auto& s : sentences) {
    auto part = extract_reverb(s);
    raw.insert(raw.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  auto events = merge_and_rewrite(std::move(raw), resolve_coref(sentences));
  for (auto& e : events) {
    e.news_id = news_id;
    e.timestamp = timestamp;
  }
  return events;
}

}  // namespace

std::vector<EventTuple> extract_document(std::string_view body, const std::string& news_id,
                                         const std::string& timestamp) {
  return extract_sentences(tokenize_and_tag(body), news_id, timestamp);
}

namespace {

std::string normalized_predicate(const std::string& p) {
  std::istringstream is(lower(p));
  std::string w, out;
  while (is >> w) out += (out.empty() ? "" : " ") + w;
  return out;
}

}  // namespace

CorpusStats extract_corpus(std::istream& news, std::ostream& events_out, const ExtractOptions& options,
                           const std::vector<DateRange>& splits) {
  CorpusStats stats;
  std::vector<DateRange> ranges = splits;
  if (ranges.empty()) ranges.push_back({"all", "0000-01-01", "9999-12-31"});
  for (const auto& r : ranges) {
    stats.split_names.push_back(r.name);
    stats.splits[r.name];
  }
  std::map<std::string, std::set<std::string>> days_per_split;

  struct DocEvents {
    std::string split;
    std::vector<EventTuple> events;
  };
  const bool buffered = options.lexical_min_occurrences > 0;
  std::vector<DocEvents> buffer;
  std::unordered_map<std::string, std::size_t> predicate_counts;

  auto count_events = [&](const std::string& split, const std::vector<EventTuple>& evs) {
    if (split.empty()) return;
    auto& st = stats.splits[split];
    for (const auto& e : evs) {
      ++st.events;
      st.words_in_events += event_words(e).size();
    }
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(news, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    NewsRecord rec;
    std::string problem;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!j.is_object()) throw std::runtime_error("record is not a JSON object");
      rec.id = j.at("id").get<std::string>();
      rec.timestamp = j.at("timestamp").get<std::string>();
      rec.body = j.at("body").get<std::string>();
      rec.source = j.value("source", std::string{});
      rec.title = j.value("title", std::string{});
      if (rec.id.empty()) problem = "empty id";
    } catch (const std::exception& ex) {
      problem = ex.what();
    }
    std::optional<Date> date;
    if (problem.empty()) {
      date = timestamp_date(rec.timestamp);
      if (!date) problem = "invalid RFC 3339 timestamp '" + rec.timestamp + "'";
    }
    if (!problem.empty()) {
      ++stats.skipped_records;
      stats.warnings.push_back("news line " + std::to_string(line_no) + " skipped: " + problem);
      continue;
    }

    const std::string day = format_date(*date);
    std::string split;
    for (const auto& r : ranges) {
      if (day >= r.first && day <= r.last) {
        split = r.name;
        break;
      }
    }
    const auto sentences = tokenize_and_tag(rec.body);
    auto events = extract_sentences(sentences, rec.id, rec.timestamp);
    if (!split.empty()) {
      auto& st = stats.splits[split];
      ++st.news;
      days_per_split[split].insert(day);
      st.sentences += sentences.size();
      for (const auto& s : sentences) {
        for (Tag t : s.tags) st.words += t == Tag::PUNCT ? 0 : 1;
      }
    }
    if (buffered) {
      for (const auto& e : events) ++predicate_counts[normalized_predicate(e.p)];
      buffer.push_back({split, std::move(events)});
    } else {
      count_events(split, events);
      for (const auto& e : events) write_event_jsonl(events_out, e);
    }
  }

  if (buffered) {
    for (auto& doc : buffer) {
      std::vector<EventTuple> kept;
      for (auto& e : doc.events) {
        if (predicate_counts[normalized_predicate(e.p)] >= options.lexical_min_occurrences) kept.push_back(std::move(e));
      }
      count_events(doc.split, kept);
      for (const auto& e : kept) write_event_jsonl(events_out, e);
    }
  }
  for (auto& [name, days] : days_per_split) stats.splits[name].news_days = days.size();
  return stats;
}

std::string stats_to_json(const CorpusStats& stats) {
  nlohmann::ordered_json j;
  j["columns"] = stats.split_names;
  auto row = [&](const std::string& label, auto getter) {
    nlohmann::ordered_json r = nlohmann::ordered_json::array();
    r.push_back(label);
    for (const auto& name : stats.split_names) r.push_back(getter(stats.splits.at(name)));
    j["rows"].push_back(r);
  };
  row("# news days", [](const SplitStats& s) { return s.news_days; });
  row("# news", [](const SplitStats& s) { return s.news; });
  row("# news/day", [](const SplitStats& s) { return s.news_per_day(); });
  row("# sentences", [](const SplitStats& s) { return s.sentences; });
  row("# words", [](const SplitStats& s) { return s.words; });
  row("# events", [](const SplitStats& s) { return s.events; });
  row("# events/news", [](const SplitStats& s) { return s.events_per_news(); });
  row("# events/day", [](const SplitStats& s) { return s.events_per_day(); });
  row("# words in events", [](const SplitStats& s) { return s.words_in_events; });
  row("# words/event", [](const SplitStats& s) { return s.words_per_event(); });
  j["skipped_records"] = stats.skipped_records;
  return j.dump(2);
}

}  // namespace evhan::text
