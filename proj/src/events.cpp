#include "evhan/events.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "evhan/errors.hpp"

namespace evhan {

std::vector<std::string> event_words(const EventTuple& e) {
  std::vector<std::string> words;
  for (const std::string* part : {&e.a1, &e.p, &e.a2}) {
    std::istringstream is(*part);
    std::string w;
    while (is >> w) words.push_back(w);
  }
  return words;
}

std::string event_text(const EventTuple& e) {
  std::string out;
  for (const auto& w : event_words(e)) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

void write_event_jsonl(std::ostream& out, const EventTuple& e) {
  nlohmann::ordered_json j;
  j["news_id"] = e.news_id;
  j["timestamp"] = e.timestamp;
  j["a1"] = e.a1;
  j["p"] = e.p;
  j["a2"] = e.a2;
  j["sentence_idx"] = e.sentence_idx;
  out << j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
}

void write_events_jsonl(const std::string& path, const std::vector<EventTuple>& events) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open events file for writing: " + path);
  for (const auto& e : events) write_event_jsonl(out, e);
  if (!out) throw DataError("failed writing events file: " + path);
}

std::vector<EventTuple> read_events_jsonl(std::istream& in) {
  std::vector<EventTuple> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      EventTuple e;
      e.news_id = j.at("news_id").get<std::string>();
      e.timestamp = j.at("timestamp").get<std::string>();
      e.a1 = j.at("a1").get<std::string>();
      e.p = j.at("p").get<std::string>();
      e.a2 = j.value("a2", std::string{});
      e.sentence_idx = j.at("sentence_idx").get<int>();
      events.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw DataError("events line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return events;
}

std::vector<EventTuple> read_events_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open events file: " + path);
  return read_events_jsonl(in);
}

}  // namespace evhan
