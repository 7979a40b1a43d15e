#include "lexicon.hpp"

#include <string>
#include <unordered_map>
#include <unordered_set>

namespace evhan::text::lexicon {
namespace {

// Closed classes plus frequent open-class words of financial news. Anything
// missing falls through to the suffix rules in the tagger.
const std::unordered_map<std::string_view, Tag>& table() {
  static const std::unordered_map<std::string_view, Tag> t = [] {
    std::unordered_map<std::string_view, Tag> m;
    auto add = [&m](Tag tag, std::initializer_list<std::string_view> words) {
      for (auto w : words) m.emplace(w, tag);
    };
    add(Tag::DET, {"a", "an", "the", "these", "those", "each", "every", "some", "any", "no", "all", "both",
                   "another", "either", "neither", "several", "many", "few", "most", "such"});
    add(Tag::PRON, {"i", "you", "he", "she", "it", "we", "they", "me", "him", "her", "us", "them", "his",
                    "its", "their", "our", "my", "your", "this", "that", "who", "whom", "which", "what",
                    "itself", "himself", "herself", "themselves", "there", "everyone", "someone", "nobody"});
    add(Tag::PREP, {"of", "in", "on", "at", "for", "with", "by", "from", "about", "as", "into", "over",
                    "under", "after", "before", "between", "through", "during", "against", "among", "since",
                    "until", "within", "without", "above", "below", "than", "like", "near", "per", "via",
                    "despite", "toward", "towards", "upon", "across", "behind", "beyond", "around", "amid",
                    "onto", "throughout", "versus", "vs."});
    add(Tag::PART, {"to", "up", "out", "off", "down", "away", "back"});
    add(Tag::OTHER, {"and", "or", "but", "nor", "yet", "because", "while", "although", "though", "if",
                     "whether", "unless", "whereas", "when", "where", "why", "how", "then"});
    add(Tag::VERB,
        {"is", "are", "was", "were", "be", "been", "being", "am", "have", "has", "had", "having", "do",
         "does", "did", "will", "would", "shall", "should", "can", "could", "may", "might", "must", "'re",
         "'ve", "'ll", "'d", "'m", "say", "says", "said", "rose", "rise", "rises", "fell", "fall", "falls",
         "lost", "lose", "loses", "gained", "gain", "gains", "dropped", "drop", "drops", "buy", "buys",
         "bought", "sell", "sells", "sold", "pass", "passes", "passed", "make", "makes", "made", "take",
         "takes", "took", "taken", "see", "sees", "saw", "seen", "think", "thinks", "thought", "get", "gets",
         "got", "go", "goes", "went", "gone", "yield", "triggered", "trigger", "triggers", "oversee",
         "oversees", "oversaw", "hold", "holds", "held", "expect", "expects", "expected", "plan", "plans",
         "planned", "announced", "announce", "announces", "reported", "report", "reports", "raise",
         "raised", "raises", "cut", "cuts", "climbed", "climb", "climbs", "slipped", "slid", "jumped",
         "surged", "tumbled", "plunged", "declined", "decline", "declines", "increased", "increase",
         "increases", "decreased", "acquire", "acquired", "acquires", "agreed", "agree", "agrees", "added",
         "add", "adds", "told", "tell", "tells", "became", "become", "becomes", "remain", "remains",
         "remained", "help", "helps", "helped", "want", "wants", "wanted", "need", "needs", "needed",
         "believe", "believes", "believed", "keep", "keeps", "kept", "stop", "stops", "stopped", "seem",
         "seems", "seemed", "warned", "warn", "warns", "cautioned", "looked", "look", "looks", "fared",
         "dipped", "undermined", "slowed", "clung", "marks", "owns", "own", "lead", "leads", "led", "sees",
         "offer", "offers", "offered", "rallied", "rally", "rallies", "posted", "post", "posts", "eased",
         "ease", "eases", "beat", "beats", "missed", "miss", "misses"});
    add(Tag::ADJ, {"able", "new", "best", "better", "good", "big", "bigger", "biggest", "high", "higher",
                   "highest", "low", "lower", "lowest", "controversial", "financial", "corporate", "recent",
                   "illiquid", "liquid", "more", "less", "much", "last", "next", "first", "second", "third",
                   "strong", "weak", "large", "small", "major", "global", "economic", "federal", "public",
                   "private", "early", "late", "sharp", "great", "long", "short", "same", "other", "own",
                   "key", "top", "main", "total", "annual", "quarterly", "monthly", "daily", "previous",
                   "current", "former", "chief", "senior", "fiscal", "net", "average", "further", "likely",
                   "unable", "worse", "worst", "different", "promising", "divergent", "significant"});
    add(Tag::ADV, {"not", "n't", "now", "almost", "heavily", "also", "still", "very", "just", "only",
                   "already", "even", "ever", "never", "so", "too", "briefly", "again", "often", "soon",
                   "here", "rather", "quite", "nearly", "roughly", "about-face", "sharply", "slightly",
                   "partly", "largely", "mostly", "always", "perhaps", "however", "instead", "once"});
    add(Tag::NUM, {"one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "hundred",
                   "thousand", "million", "billion", "trillion", "$", "dozen"});
    add(Tag::NOUN, {"equities", "bonds", "stocks", "shares", "market", "markets", "percent", "%", "company",
                    "companies", "investors", "analysts", "people", "index", "price", "prices", "bill",
                    "chairman", "package", "opportunity", "reason", "matters", "flight", "collapse", "heels",
                    "weeks", "week", "year", "years", "month", "months", "day", "days", "points", "economy",
                    "momentum", "earnings", "rate", "rates", "government", "bank", "banks", "trading",
                    "president", "official", "officials", "debt", "money", "cash", "sales", "profit"});
    return m;
  }();
  return t;
}

}  // namespace

std::optional<Tag> lookup(std::string_view lower) {
  const auto& t = table();
  if (auto it = t.find(lower); it != t.end()) return it->second;
  return std::nullopt;
}

bool is_auxiliary(std::string_view lower) {
  static const std::unordered_set<std::string_view> aux = {
      "is",  "are",  "was",    "were", "be",   "been", "being", "am",    "have",  "has",   "had",
      "do",  "does", "did",    "will", "would", "shall", "should", "can", "could", "may",   "might",
      "must", "'s",  "'re",    "'ve",  "'ll",  "'d",   "'m",    "having", "get",  "got",   "gets"};
  return aux.contains(lower);
}

bool is_abbreviation(std::string_view w) {
  static const std::unordered_set<std::string_view> abbrev = {
      "mr.",  "mrs.", "ms.",  "dr.",  "prof.", "sr.",  "jr.",  "st.",  "inc.", "corp.", "co.",
      "ltd.", "llc.", "plc.", "jan.", "feb.",  "mar.", "apr.", "aug.", "sep.", "sept.", "oct.",
      "nov.", "dec.", "no.",  "vs.",  "etc.",  "gov.", "sen.", "rep.", "gen.", "dept.", "est."};
  return abbrev.contains(w);
}

bool is_resolvable_pronoun(std::string_view lower) {
  static const std::unordered_set<std::string_view> p = {"he",  "she", "it",  "they", "this", "that",
                                                          "him", "his", "her", "its",  "them", "their"};
  return p.contains(lower);
}

}  // namespace evhan::text::lexicon
