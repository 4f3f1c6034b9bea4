#include "wlm/app/synthetic.hpp"

#include <map>
#include <set>
#include <sstream>

#include "wlm/core/rng.hpp"

namespace wlm::app {

namespace {

struct Lexicon {
  std::string slot;
  std::vector<std::string> phrases;
};

struct Grammar {
  std::map<std::string, std::vector<std::string>> rules;
  std::map<std::string, Lexicon> slots;
  std::vector<std::pair<std::string, double>> intents;  // intent rule name, weight
};

const std::vector<std::string> kCities = {
    "boston", "denver", "dallas", "atlanta", "baltimore", "pittsburgh", "philadelphia",
    "oakland", "houston", "miami", "chicago", "seattle", "detroit", "phoenix", "orlando",
    "memphis", "nashville", "charlotte", "cleveland", "milwaukee", "new york", "san francisco",
    "los angeles", "salt lake city", "fort worth", "st louis", "kansas city", "las vegas",
    "washington", "tampa", "newark", "toronto", "montreal", "indianapolis", "columbus",
    "cincinnati", "minneapolis", "san diego", "san jose", "long beach"};

const Grammar& grammar() {
  static const Grammar g = [] {
    Grammar g;
    g.slots["from"] = {"fromloc.city_name", kCities};
    g.slots["to"] = {"toloc.city_name", kCities};
    g.slots["city"] = {"city_name", kCities};
    g.slots["day"] = {"depart_date.day_name",
                      {"monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"}};
    g.slots["month"] = {"depart_date.month_name",
                        {"january", "february", "march", "april", "may", "june", "july", "august",
                         "september", "october", "november", "december"}};
    g.slots["daynum"] = {"depart_date.day_number",
                         {"first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth",
                          "ninth", "tenth", "twelfth", "fifteenth", "twentieth", "twenty first",
                          "thirtieth"}};
    g.slots["period"] = {"depart_time.period_of_day",
                         {"morning", "afternoon", "evening", "night", "early morning", "late evening"}};
    g.slots["carrier"] = {"airline_name",
                          {"united", "delta", "american airlines", "us air", "continental", "northwest",
                           "twa", "alaska airlines", "southwest", "lufthansa", "air canada"}};
    g.slots["class"] = {"class_type", {"first class", "business class", "coach", "economy"}};
    g.slots["trip"] = {"round_trip", {"round trip", "one way"}};
    g.slots["cost"] = {"cost_relative", {"cheapest", "lowest", "least expensive"}};
    g.slots["transport"] = {"transport_type",
                            {"taxi", "limousine", "rental car", "bus", "ground transportation"}};

    g.rules["date"] = {"on {day}", "on {month} {daynum}", "{day} {period}", "next {day}"};
    g.rules["route"] = {"from {from} to {to}", "between {from} and {to}", "to {to} from {from}",
                        "leaving {from} going to {to}"};
    g.rules["want"] = {"i want", "i would like", "i need", "please give me", "can you show me"};

    g.rules["flight"] = {
        "show me {cost?} flights {route} {date?}",
        "{want} a {trip?} flight {route} {date?} {period?}",
        "list {carrier?} flights {route} {date?}",
        "what flights are available {route} {date?} in the {period}",
        "i want to fly {route} {date?} on {carrier}",
        "are there any {class?} flights {route} {date?}",
        "find me a flight {route} arriving in the {period}"};
    g.rules["airfare"] = {
        "how much does a {trip?} ticket {route} cost",
        "what is the {cost?} fare {route} {date?}",
        "show me {class?} fares {route}",
        "what are the {trip} fares {route} on {carrier?}",
        "give me the {cost} {class?} fare {route}"};
    g.rules["ground_service"] = {
        "what {transport} is available in {city}",
        "is there {transport} from the airport to downtown {city}",
        "how do i get from the {city} airport to downtown",
        "i need a {transport} in {city} {date?}"};
    g.rules["airline"] = {
        "which airlines fly {route}",
        "what airlines have flights {route} {date?}",
        "does {carrier} fly {route}"};
    g.rules["flight_time"] = {
        "what are the departure times {route} {date?}",
        "what time does the {carrier?} flight {route} leave",
        "give me the times of flights {route} in the {period}"};
    g.rules["distance"] = {
        "how far is the airport from downtown {city}",
        "what is the distance from {city} airport to downtown",
        "how many miles is it {route}"};
    g.rules["capacity"] = {
        "how many seats does the {carrier} plane hold",
        "how many passengers fit on a {carrier} flight {route}"};

    g.intents = {{"flight", 0.55}, {"airfare", 0.15}, {"ground_service", 0.08}, {"airline", 0.07},
                 {"flight_time", 0.06}, {"distance", 0.05}, {"capacity", 0.04}};
    return g;
  }();
  return g;
}

void expand(const Grammar& g, const std::string& templ, Rng& rng, slu::TaggedUtterance& out) {
  std::istringstream in(templ);
  std::string word;
  while (in >> word) {
    if (word.front() != '{') {
      out.tokens.push_back(word);
      out.tags.push_back("O");
      continue;
    }
    std::string name = word.substr(1, word.size() - 2);
    if (name.back() == '?') {
      name.pop_back();
      if (!rng.bernoulli(0.5)) continue;
    }
    if (auto slot = g.slots.find(name); slot != g.slots.end()) {
      const auto& phrase = slot->second.phrases[rng.below(slot->second.phrases.size())];
      std::istringstream words(phrase);
      std::string w;
      bool first = true;
      while (words >> w) {
        out.tokens.push_back(w);
        out.tags.push_back((first ? "B-" : "I-") + slot->second.slot);
        first = false;
      }
    } else {
      const auto& alts = g.rules.at(name);
      expand(g, alts[rng.below(alts.size())], rng, out);
    }
  }
}

}  // namespace

slu::TaggedUtterance synthetic_utterance(std::uint64_t seed) {
  const auto& g = grammar();
  Rng rng(seed);
  double u = rng.uniform();
  std::string intent = g.intents.back().first;
  for (const auto& [name, w] : g.intents) {
    if (u < w) {
      intent = name;
      break;
    }
    u -= w;
  }
  slu::TaggedUtterance out;
  out.intent = intent;
  const auto& alts = g.rules.at(intent);
  expand(g, alts[rng.below(alts.size())], rng, out);
  return out;
}

SluTask synthetic_slu_task(const SyntheticSizes& sizes, std::uint64_t seed) {
  SluTask task;
  auto fill = [&](slu::SluDataset& split, std::size_t n, std::uint64_t stream) {
    for (std::size_t i = 0; i < n; ++i) split.push_back(synthetic_utterance(derive_seed(seed, stream, i)));
  };
  fill(task.train, sizes.train, 1);
  fill(task.val, sizes.val, 2);
  fill(task.test, sizes.test, 3);
  return task;
}

std::vector<std::string> synthetic_corpus(std::size_t n_sentences, std::uint64_t seed) {
  std::vector<std::string> lines;
  lines.reserve(n_sentences);
  for (std::size_t i = 0; i < n_sentences; ++i) {
    const auto u = synthetic_utterance(derive_seed(seed, 4, i));
    std::string line;
    for (const auto& t : u.tokens) line += (line.empty() ? "" : " ") + t;
    lines.push_back(std::move(line));
  }
  return lines;
}

std::vector<std::string> synthetic_lexicon() {
  const auto& g = grammar();
  std::set<std::string> words;
  auto add_words = [&](const std::string& s) {
    std::istringstream in(s);
    std::string w;
    while (in >> w) {
      if (w.front() != '{') words.insert(w);
    }
  };
  for (const auto& [_, alts] : g.rules) {
    for (const auto& a : alts) add_words(a);
  }
  for (const auto& [_, lex] : g.slots) {
    for (const auto& p : lex.phrases) add_words(p);
  }
  return {words.begin(), words.end()};
}

}  // namespace wlm::app
