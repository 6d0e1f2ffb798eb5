#include "agentdiff/perturb.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>

#include "agentdiff/error.hpp"
#include "agentdiff/rng.hpp"
#include "agentdiff/text.hpp"
#include "json.hpp"

namespace agentdiff::perturb {

namespace {

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) {
  return static_cast<unsigned char>(c) >= 0x80 || std::isalnum(static_cast<unsigned char>(c)) != 0;
}

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive, right after the terminator
};

// Unit spans over the original text, trimmed of surrounding whitespace.
std::vector<Span> unit_spans(std::string_view s, ReorderUnit unit) {
  std::vector<Span> out;
  std::size_t start = 0;
  auto push = [&](std::size_t end) {
    std::size_t b = start;
    std::size_t e = end;
    while (b < e && is_ws(s[b])) ++b;
    while (e > b && is_ws(s[e - 1])) --e;
    if (e > b) out.push_back({b, e});
    start = end;
  };
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    const bool at_break = i + 1 == s.size() || is_ws(s[i + 1]);
    bool terminator = c == '.' || c == '?' || c == '!';
    if (unit == ReorderUnit::clause) terminator = terminator || c == ',' || c == ';';
    if (terminator && at_break) push(i + 1);
  }
  push(s.size());
  return out;
}

const std::set<std::string>& closed_class_words() {
  static const std::set<std::string> words = {
      "a",     "an",    "the",  "and",   "or",    "but",  "if",    "of",    "in",   "on",
      "at",    "to",    "for",  "from",  "by",    "with", "as",    "is",    "are",  "was",
      "were",  "be",    "been", "it",    "its",   "he",   "she",   "they",  "we",   "you",
      "i",     "his",   "her",  "their", "our",   "your", "my",    "this",  "that", "these",
      "those", "what",  "which", "who",  "whom",  "how",  "when",  "where", "why",  "not",
      "no",    "do",    "does", "did",   "has",   "have", "had",   "will",  "would", "can",
      "could", "shall", "should", "may", "might", "must", "than",  "then",  "there", "here"};
  return words;
}

bool looks_like_refusal(std::string_view s) {
  const std::string low = text::to_lower_ascii(text::trim(s));
  for (const char* p : {"i can't", "i cannot", "i'm sorry", "i am sorry", "sorry, i", "as an ai"}) {
    if (low.rfind(p, 0) == 0) return true;
  }
  return false;
}

std::string strip_boxed(std::string s) {
  s = text::trim(s);
  if (s.rfind("\\boxed{", 0) == 0 && !s.empty() && s.back() == '}') {
    s = s.substr(7, s.size() - 8);
  }
  if (s.size() >= 2 && s.front() == '$' && s.back() == '$') s = s.substr(1, s.size() - 2);
  return text::trim(s);
}

std::string numeric_cleanup(std::string_view answer) {
  std::string s = strip_boxed(std::string(answer));
  s = text::replace_all(s, "\\!", "");
  s = text::replace_all(s, "\\,", "");
  s = text::replace_all(s, "\\dfrac", "\\frac");
  s = text::replace_all(s, "\\tfrac", "\\frac");
  s = text::replace_all(s, "\\%", "%");
  s = text::replace_all(s, "\\$", "$");
  std::string out;
  for (char c : s) {
    if (!is_ws(c)) out.push_back(c);
  }
  if (!out.empty() && out.back() == '.') out.pop_back();
  if (!out.empty() && out.back() == '%') out.pop_back();
  if (!out.empty() && out.front() == '$') out.erase(out.begin());
  if (out.size() > 1 && (out[0] == '-' || out[0] == '+') && out[1] == '$') out.erase(1, 1);
  return out;
}

long long gcd_ll(long long a, long long b) {
  a = std::llabs(a);
  b = std::llabs(b);
  while (b != 0) {
    const long long t = a % b;
    a = b;
    b = t;
  }
  return a;
}

std::optional<Rational> reduce(long long num, long long den) {
  if (den == 0) return std::nullopt;
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const long long g = gcd_ll(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  return Rational{num, den};
}

// Decimal literal with optional thousands separators.
std::optional<Rational> parse_decimal(std::string_view s) {
  if (s.empty()) return std::nullopt;
  bool neg = false;
  if (s[0] == '-' || s[0] == '+') {
    neg = s[0] == '-';
    s.remove_prefix(1);
  }
  std::string digits;
  long long den = 1;
  bool seen_point = false;
  bool any_digit = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digits.push_back(c);
      any_digit = true;
      if (seen_point) {
        if (den > 100000000000000000LL) return std::nullopt;
        den *= 10;
      }
    } else if (c == ',' && !seen_point && any_digit) {
      continue;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      return std::nullopt;
    }
  }
  if (!any_digit) return std::nullopt;
  digits.erase(0, std::min(digits.find_first_not_of('0'), digits.size()));
  if (digits.size() > 18) return std::nullopt;
  const long long num = digits.empty() ? 0 : std::stoll(digits);
  return reduce(neg ? -num : num, den);
}

std::optional<Rational> parse_integer(std::string_view s) {
  auto r = parse_decimal(s);
  if (!r || r->den != 1) return std::nullopt;
  return r;
}

}  // namespace

// --- lexicon / pool -------------------------------------------------------------

Lexicon Lexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open lexicon " + path.string());
  std::map<std::string, std::vector<std::string>> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) continue;
    const std::string head = text::to_lower_ascii(text::trim(line.substr(0, tab)));
    std::vector<std::string> syns;
    std::string rest = line.substr(tab + 1);
    std::size_t pos = 0;
    while (pos <= rest.size()) {
      const auto comma = rest.find(',', pos);
      const std::string syn = text::trim(rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
      if (!syn.empty()) syns.push_back(syn);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (!head.empty() && !syns.empty()) entries[head] = std::move(syns);
  }
  return Lexicon(std::move(entries));
}

const std::vector<std::string>* Lexicon::find(std::string_view word) const {
  auto it = entries_.find(std::string(word));
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::string> load_distractor_pool(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open distractor pool " + path.string());
  std::vector<std::string> pool;
  std::string line;
  while (std::getline(in, line)) {
    line = text::trim(line);
    if (line.empty() || line[0] == '#') continue;
    pool.push_back(line);
  }
  return pool;
}

// --- presentation operators -------------------------------------------------

std::string apply_format(std::string_view input, const FormatRules& rules, std::uint64_t seed) {
  std::string s(input);
  if (rules.punctuation_spacing) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      const char c = s[i];
      if (c == ',' || c == '.' || c == ';' || c == ':' || c == '?' || c == '!') {
        while (!out.empty() && (out.back() == ' ' || out.back() == '\t')) out.pop_back();
        out.push_back(c);
        if ((c == ',' || c == ';' || c == ':') && i + 1 < s.size() && is_alpha(s[i + 1])) {
          out.push_back(' ');
        }
        continue;
      }
      out.push_back(c);
    }
    s = std::move(out);
  }
  if (rules.collapse_whitespace) s = text::collapse_whitespace(s);
  switch (rules.casing) {
    case Casing::keep:
      break;
    case Casing::lower:
      s = text::to_lower_ascii(s);
      break;
    case Casing::upper:
      s = text::to_upper_ascii(s);
      break;
    case Casing::seeded: {
      Rng rng(derive_seed(seed, "format-casing"));
      std::size_t i = 0;
      while (i < s.size()) {
        if (!is_alpha(s[i])) {
          ++i;
          continue;
        }
        std::size_t j = i;
        while (j < s.size() && is_alnum(s[j])) ++j;
        const auto choice = rng.index(4);
        for (std::size_t k = i; k < j; ++k) {
          char& c = s[k];
          const bool first = k == i;
          if (choice == 1 || (choice == 3 && !first)) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
          if (choice == 2 || (choice == 3 && first)) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        }
        i = j;
      }
      break;
    }
  }
  return s;
}

std::vector<std::string> split_units(std::string_view text, ReorderUnit unit) {
  std::vector<std::string> out;
  for (const auto& sp : unit_spans(text, unit)) out.emplace_back(text.substr(sp.begin, sp.end - sp.begin));
  return out;
}

std::string apply_reorder(std::string_view text, ReorderUnit unit, std::uint64_t seed) {
  const auto units = split_units(text, unit);
  if (units.size() < 2) throw NotPerturbable("reorder needs at least two units");
  std::vector<std::size_t> perm(units.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "reorder"));
  rng.shuffle(perm);
  bool identity = true;
  for (std::size_t i = 0; i < perm.size(); ++i) identity = identity && perm[i] == i;
  if (identity) {
    const std::size_t i = rng.index(perm.size());
    const std::size_t j = (i + 1 + rng.index(perm.size() - 1)) % perm.size();
    std::swap(perm[i], perm[j]);
  }
  std::string out;
  std::string joined;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if (i) {
      out.push_back(' ');
      joined.push_back(' ');
    }
    out += units[perm[i]];
    joined += units[i];
  }
  if (out == joined) throw NotPerturbable("all reorder units are identical");
  return out;
}

Insertion insert_distractor(std::string_view text, const std::vector<std::string>& pool,
                            std::uint64_t seed) {
  if (pool.empty()) throw ConfigError("distractor pool is empty");
  std::vector<std::size_t> points{0};
  for (const auto& sp : unit_spans(text, ReorderUnit::sentence)) points.push_back(sp.end);
  points.erase(std::unique(points.begin(), points.end()), points.end());
  Rng rng(derive_seed(seed, "distractor"));
  Insertion ins;
  ins.sentence = text::trim(pool[rng.index(pool.size())]);
  const std::size_t at = points[rng.index(points.size())];
  if (at == 0) {
    ins.text = ins.sentence + " " + std::string(text);
    ins.offset = 0;
  } else {
    ins.text = std::string(text.substr(0, at)) + " " + ins.sentence + std::string(text.substr(at));
    ins.offset = at;
  }
  ins.length = ins.sentence.size() + 1;
  return ins;
}

std::string apply_distractor(std::string_view text, const std::vector<std::string>& pool,
                             std::uint64_t seed) {
  return insert_distractor(text, pool, seed).text;
}

// --- meaning-bearing operators ------------------------------------------------

std::string apply_synonym_lexicon(std::string_view text, const Lexicon& lexicon, double rate,
                                  std::uint64_t seed,
                                  const std::set<std::string>& protected_tokens) {
  Rng rng(derive_seed(seed, "synonym"));
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_alpha(text[i])) {
      out.push_back(text[i++]);
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_alnum(text[j])) ++j;
    const std::string word(text.substr(i, j - i));
    const std::string low = text::to_lower_ascii(word);
    const auto* syns = lexicon.find(low);
    if (syns && !protected_tokens.count(low) && !closed_class_words().count(low) &&
        rng.bernoulli(rate)) {
      std::string rep = (*syns)[rng.index(syns->size())];
      if (std::isupper(static_cast<unsigned char>(word[0])) && !rep.empty()) {
        rep[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(rep[0])));
      }
      out += rep;
    } else {
      out += word;
    }
    i = j;
  }
  return out;
}

std::string apply_meaning_bearing(std::string_view text, const std::string& gold_answer,
                                  const OperatorConfig& config, ChatModel* generator,
                                  const Lexicon* lexicon, const PromptTemplate* prompt,
                                  const std::string& subject_id) {
  if (side_of(config.op) != Side::meaning_bearing) {
    throw ConfigError("apply_meaning_bearing called with a presentation operator");
  }
  if (config.generator_ref == "lexicon") {
    if (config.op == Operator::paraphrase) {
      throw ConfigError("paraphrase cannot use the lexicon generator");
    }
    if (!lexicon) throw ConfigError("synonym lexicon not loaded");
    const auto gold = text::tokens(gold_answer);
    return apply_synonym_lexicon(text, *lexicon, config.synonym_rate, config.seed,
                                 std::set<std::string>(gold.begin(), gold.end()));
  }
  if (!generator) throw ConfigError("no generator for '" + config.generator_ref + "'");
  if (!prompt) throw ConfigError("no prompt template for " + std::string(to_string(config.op)));
  ChatRequest req;
  req.messages.push_back({"user", prompt->render({{"question", std::string(text)}})});
  req.temperature = 0.7;
  req.seed = config.seed;
  std::string out;
  try {
    out = generator->complete(req, CallContext{subject_id, 0});
  } catch (const AdapterError& e) {
    throw GeneratorUnavailable(std::string("generator failed: ") + e.what());
  }
  out = text::trim(out);
  if (out.empty()) throw GeneratorUnavailable("generator returned an empty rewrite");
  if (looks_like_refusal(out)) throw GeneratorUnavailable("generator refused: " + out.substr(0, 80));
  return out;
}

// --- answers and judges --------------------------------------------------------

std::optional<Rational> parse_rational(std::string_view answer) {
  const std::string s = numeric_cleanup(answer);
  if (s.empty()) return std::nullopt;
  std::string body = s;
  bool neg = false;
  if (body[0] == '-' || body[0] == '+') {
    neg = body[0] == '-';
    body.erase(0, 1);
  }
  std::optional<Rational> r;
  if (body.rfind("\\frac{", 0) == 0) {
    const auto mid = body.find("}{");
    if (mid != std::string::npos && body.back() == '}') {
      auto a = parse_integer(body.substr(6, mid - 6));
      auto b = parse_integer(body.substr(mid + 2, body.size() - mid - 3));
      if (a && b) r = reduce(a->num, b->num);
    }
  } else if (const auto slash = body.find('/'); slash != std::string::npos) {
    auto a = parse_integer(body.substr(0, slash));
    auto b = parse_integer(body.substr(slash + 1));
    if (a && b) r = reduce(a->num, b->num);
  } else {
    r = parse_decimal(body);
  }
  if (r && neg) r->num = -r->num;
  return r;
}

std::optional<double> parse_number(std::string_view answer) {
  if (auto r = parse_rational(answer)) return static_cast<double>(r->num) / static_cast<double>(r->den);
  std::string s = numeric_cleanup(answer);
  s.erase(std::remove(s.begin(), s.end(), ','), s.end());
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string normalize_answer_text(std::string_view answer) {
  std::string s = text::to_lower_ascii(strip_boxed(std::string(answer)));
  std::string cleaned;
  for (char c : s) {
    if (std::ispunct(static_cast<unsigned char>(c))) {
      cleaned.push_back(' ');
    } else {
      cleaned.push_back(c);
    }
  }
  const std::string out = text::collapse_whitespace(cleaned);
  std::string result;
  std::size_t pos = 0;
  while (pos < out.size()) {
    auto sp = out.find(' ', pos);
    const std::string word = out.substr(pos, sp == std::string::npos ? std::string::npos : sp - pos);
    if (word != "a" && word != "an" && word != "the" && !word.empty()) {
      if (!result.empty()) result.push_back(' ');
      result += word;
    }
    if (sp == std::string::npos) break;
    pos = sp + 1;
  }
  return result;
}

bool answers_equivalent(std::string_view a, std::string_view b) {
  const auto ra = parse_rational(a);
  const auto rb = parse_rational(b);
  if (ra && rb) return *ra == *rb;
  const auto na = parse_number(a);
  const auto nb = parse_number(b);
  if (na && nb) return std::abs(*na - *nb) <= 1e-9 * std::max({1.0, std::abs(*na), std::abs(*nb)});
  if (na || nb) return false;
  return normalize_answer_text(a) == normalize_answer_text(b);
}

JudgeDecision judge_rules(const Question& original, const Variant& variant) {
  if (side_of(variant.op) != Side::presentation) {
    throw ConfigError("the rules judge only screens presentation operators");
  }
  JudgeDecision d;
  d.variant_id = variant.id;
  d.judge_id = "rules";
  std::map<std::string, int> need;
  for (const auto& n : text::numbers(original.text)) need[n] += 1;
  for (const auto& n : text::numbers(variant.text)) {
    auto it = need.find(n);
    if (it != need.end() && it->second > 0) --it->second;
  }
  for (const auto& [n, left] : need) {
    if (left > 0) {
      d.verdict = Verdict::not_equivalent;
      d.rationale = "numeric literal '" + n + "' lost";
      return d;
    }
  }
  const auto qtok = text::tokens(original.text);
  const std::set<std::string> qset(qtok.begin(), qtok.end());
  const auto vtok = text::tokens(variant.text);
  const std::set<std::string> vset(vtok.begin(), vtok.end());
  for (const auto& g : text::tokens(original.gold_answer)) {
    if (qset.count(g) && !vset.count(g)) {
      d.verdict = Verdict::not_equivalent;
      d.rationale = "gold-answer token '" + g + "' lost";
      return d;
    }
  }
  d.verdict = Verdict::equivalent;
  d.rationale = "numeric literals and gold-answer tokens preserved";
  return d;
}

Verdict parse_judge_response(std::string_view response) {
  const std::string s = text::trim(response);
  if (const auto brace = s.find('{'); brace != std::string::npos) {
    const auto close = s.rfind('}');
    if (close != std::string::npos && close > brace) {
      auto j = nlohmann::json::parse(s.substr(brace, close - brace + 1), nullptr, false);
      if (!j.is_discarded() && j.is_object() && j.contains("equivalent") &&
          j["equivalent"].is_boolean()) {
        return j["equivalent"].get<bool>() ? Verdict::equivalent : Verdict::not_equivalent;
      }
    }
  }
  std::size_t i = 0;
  while (i < s.size() && !is_alpha(s[i])) ++i;
  std::size_t j = i;
  while (j < s.size() && is_alpha(s[j])) ++j;
  const std::string word = text::to_lower_ascii(s.substr(i, j - i));
  if (word == "yes" || word == "equivalent") return Verdict::equivalent;
  if (word == "no") return Verdict::not_equivalent;
  return Verdict::indeterminate;
}

JudgeDecision judge_llm(const Question& original, const Variant& variant, ChatModel& judge,
                        const PromptTemplate& prompt, const std::string& judge_id) {
  JudgeDecision d;
  d.variant_id = variant.id;
  d.judge_id = judge_id;
  ChatRequest req;
  req.messages.push_back({"user", prompt.render({{"original", original.text},
                                                 {"variant", variant.text},
                                                 {"gold", original.gold_answer}})});
  req.temperature = 0.0;
  req.max_tokens = 64;
  try {
    d.raw_response = judge.complete(req, CallContext{variant.id, 0});
  } catch (const AdapterError& e) {
    d.verdict = Verdict::indeterminate;
    d.rationale = std::string("judge unavailable: ") + e.what();
    return d;
  }
  d.verdict = parse_judge_response(d.raw_response);
  d.rationale = d.verdict == Verdict::indeterminate ? "unparseable judge response"
                                                    : "prompt " + prompt.id();
  return d;
}

std::vector<Variant> generate_variants(const Question& question,
                                       const std::vector<OperatorConfig>& configs,
                                       int samples_per_operator,
                                       const GenerationResources& resources, GenerationLog& log) {
  std::vector<Variant> out;
  for (const auto& base : configs) {
    std::set<std::string> seen;
    for (int s = 0; s < samples_per_operator; ++s) {
      OperatorConfig cfg = base;
      cfg.seed = derive_seed(derive_seed(base.seed, question.id), static_cast<std::uint64_t>(s));
      const std::string vid =
          question.id + "::" + std::string(to_string(cfg.op)) + "::" + std::to_string(s);
      std::string text;
      try {
        switch (cfg.op) {
          case Operator::format:
            text = apply_format(question.text, cfg.format, cfg.seed);
            break;
          case Operator::reorder:
            text = apply_reorder(question.text, cfg.reorder_unit, cfg.seed);
            break;
          case Operator::distractor:
            text = apply_distractor(question.text, cfg.distractor_pool, cfg.seed);
            break;
          case Operator::paraphrase:
          case Operator::synonym:
          {
            ChatModel* gen = resources.generator;
            if (auto it = resources.generators.find(cfg.op); it != resources.generators.end()) gen = it->second;
            text = apply_meaning_bearing(
                question.text, question.gold_answer, cfg, gen, resources.lexicon,
                cfg.op == Operator::paraphrase ? resources.paraphrase_prompt : resources.synonym_prompt,
                vid);
          }
            break;
        }
      } catch (const NotPerturbable& e) {
        ++log.not_perturbable;
        log.messages.push_back(vid + ": not perturbable: " + e.what());
        continue;
      } catch (const GeneratorUnavailable& e) {
        ++log.generator_unavailable;
        log.messages.push_back(vid + ": " + e.what());
        continue;
      }
      if (text == question.text) {
        ++log.not_perturbable;
        log.messages.push_back(vid + ": operator produced the original text; skipped");
        continue;
      }
      if (!seen.insert(text).second) {
        log.messages.push_back(vid + ": duplicate of an earlier sample; skipped");
        continue;
      }
      Variant v;
      v.id = vid;
      v.question_id = question.id;
      v.op = cfg.op;
      v.side = side_of(cfg.op);
      v.text = std::move(text);
      out.push_back(std::move(v));
    }
  }
  return out;
}

}  // namespace agentdiff::perturb
