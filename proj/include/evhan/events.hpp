#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace evhan {

/// A financial event <a1, p, a2, timestamp> tied to the sentence it came from.
struct EventTuple {
  std::string news_id;
  std::string timestamp;  // publication time of the source news (RFC 3339)
  std::string a1;
  std::string p;
  std::string a2;  // empty for intransitive extractions
  int sentence_idx = 0;

  friend bool operator==(const EventTuple&, const EventTuple&) = default;
};

/// All words of the event, a1 then p then a2, split on whitespace.
std::vector<std::string> event_words(const EventTuple& e);
std::string event_text(const EventTuple& e);

// Events file: JSON Lines {"news_id","timestamp","a1","p","a2","sentence_idx"}.
void write_event_jsonl(std::ostream& out, const EventTuple& e);
void write_events_jsonl(const std::string& path, const std::vector<EventTuple>& events);
std::vector<EventTuple> read_events_jsonl(std::istream& in);
std::vector<EventTuple> read_events_jsonl(const std::string& path);

}  // namespace evhan
