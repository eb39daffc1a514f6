#include "mimo/protocol.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>

namespace mimo::protocol {
namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

bool istarts_with(std::string_view text, std::string_view prefix) {
  return text.size() >= prefix.size() && iequals(text.substr(0, prefix.size()), prefix);
}

/// Strips quoting and punctuation that models like to wrap single tokens in.
std::string strip_decoration(std::string_view text) {
  constexpr std::string_view kDecoration = " \t\r\n\"'`*.,;:!-";
  const auto begin = text.find_first_not_of(kDecoration);
  if (begin == std::string_view::npos) return {};
  const auto end = text.find_last_not_of(kDecoration);
  return std::string(text.substr(begin, end - begin + 1));
}

/// Drops separators between a leading token and the free text after it.
std::string strip_separator(std::string_view rest) {
  std::size_t i = 0;
  while (i < rest.size()) {
    const unsigned char c = static_cast<unsigned char>(rest[i]);
    if (std::isspace(c) || c == ':' || c == '-' || c == ',' || c == '.' || c == ';' || c == '|' || c == '(' ||
        c == ')') {
      ++i;
    } else if (rest.substr(i).starts_with("\xe2\x80\x94") || rest.substr(i).starts_with("\xe2\x80\x93")) {
      i += 3;  // em dash, en dash
    } else {
      break;
    }
  }
  return trim(rest.substr(i));
}

RouteTarget target_for(std::size_t token_index) {
  static constexpr RouteTarget kTargets[] = {RouteTarget::CreateTeam, RouteTarget::EvalTeam, RouteTarget::Revisor,
                                             RouteTarget::Finish};
  return kTargets[token_index];
}

bool word_boundary(std::string_view text, std::size_t pos, std::size_t len) {
  auto is_word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  return (pos == 0 || !is_word(text[pos - 1])) && (pos + len >= text.size() || !is_word(text[pos + len]));
}

}  // namespace

std::string trim(std::string_view text) {
  const auto begin = text.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  const auto end = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(begin, end - begin + 1));
}

std::optional<RoutingDecision> parse_route(std::string_view reply) {
  const std::string cleaned = strip_decoration(reply);
  for (std::size_t i = 0; i < std::size(kRouteTokens); ++i) {
    if (!istarts_with(cleaned, kRouteTokens[i])) continue;
    const std::string_view rest = std::string_view(cleaned).substr(kRouteTokens[i].size());
    if (!rest.empty() && (std::isalnum(static_cast<unsigned char>(rest.front())) || rest.front() == '_')) continue;
    RoutingDecision decision{target_for(i), strip_separator(rest)};
    if (decision.target == RouteTarget::Finish) decision.directive.clear();
    return decision;
  }
  // Otherwise accept a reply that mentions exactly one token.
  std::optional<std::size_t> found;
  for (std::size_t i = 0; i < std::size(kRouteTokens); ++i) {
    const auto pos = reply.find(kRouteTokens[i]);
    if (pos == std::string_view::npos || !word_boundary(reply, pos, kRouteTokens[i].size())) continue;
    if (found) return std::nullopt;
    found = i;
  }
  if (!found) return std::nullopt;
  return RoutingDecision{target_for(*found), ""};
}

std::optional<std::vector<AgentKind>> parse_agent_list(std::string_view reply, std::span<const AgentChoice> allowed) {
  std::set<std::size_t> picked;
  std::string current;
  auto flush = [&]() -> bool {
    std::string token = strip_decoration(current);
    current.clear();
    if (token.empty() || iequals(token, "and")) return true;
    for (std::size_t i = 0; i < allowed.size(); ++i) {
      if (iequals(token, allowed[i].token)) {
        picked.insert(i);
        return true;
      }
    }
    return false;
  };
  for (char c : reply) {
    if (c == ',' || c == '\n' || c == ';' || c == ' ' || c == '\t') {
      if (!flush()) return std::nullopt;
    } else {
      current.push_back(c);
    }
  }
  if (!flush() || picked.empty()) return std::nullopt;
  std::vector<AgentKind> kinds;
  for (std::size_t i : picked) kinds.push_back(allowed[i].kind);
  return kinds;
}

std::optional<ParsedVote> parse_vote(std::string_view reply) {
  std::string cleaned = trim(reply);
  // Tolerate a "Vote:" label and markdown emphasis in front of the token.
  while (!cleaned.empty() && (cleaned.front() == '*' || cleaned.front() == '"' || cleaned.front() == '`')) {
    cleaned.erase(cleaned.begin());
  }
  if (istarts_with(cleaned, "vote")) cleaned = strip_separator(std::string_view(cleaned).substr(4));
  for (Vote vote : {Vote::RECOMMENDED, Vote::REJECTED}) {
    const std::string_view token = to_string(vote);
    if (!istarts_with(cleaned, token)) continue;
    std::string_view rest = std::string_view(cleaned).substr(token.size());
    if (!rest.empty() && std::isalpha(static_cast<unsigned char>(rest.front()))) return std::nullopt;
    while (!rest.empty() && (rest.front() == '*' || rest.front() == '"' || rest.front() == '`')) rest.remove_prefix(1);
    return ParsedVote{vote, strip_separator(rest)};
  }
  return std::nullopt;
}

std::optional<std::string> extract_brace_block(std::string_view text) {
  const auto start = text.find('{');
  if (start == std::string_view::npos) return std::nullopt;
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}' && --depth == 0) {
      return std::string(text.substr(start, i - start + 1));
    }
  }
  return std::nullopt;
}

std::optional<std::vector<std::string>> parse_style_pool(std::string_view reply, int k) {
  const auto block = extract_brace_block(reply);
  if (!block) return std::nullopt;
  const json parsed = json::parse(*block, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) return std::nullopt;
  std::vector<std::string> styles;
  for (int i = 1; i <= k; ++i) {
    const auto it = parsed.find("style_" + std::to_string(i));
    if (it == parsed.end() || !it->is_string()) return std::nullopt;
    std::string description = trim(it->get<std::string>());
    if (description.empty()) return std::nullopt;
    styles.push_back(std::move(description));
  }
  return styles;
}

std::optional<std::vector<int>> parse_style_selection(std::string_view reply, int pool_size, int n) {
  static const std::regex kStyleRef(R"(style[_ ]?(\d{1,6}))", std::regex::icase);
  std::set<int> ids;
  const std::string text(reply);
  for (auto it = std::sregex_iterator(text.begin(), text.end(), kStyleRef); it != std::sregex_iterator(); ++it) {
    const int number = std::stoi((*it)[1].str());
    if (number < 1 || number > pool_size) return std::nullopt;
    ids.insert(number - 1);
  }
  if (static_cast<int>(ids.size()) != n) return std::nullopt;
  return std::vector<int>(ids.begin(), ids.end());
}

}  // namespace mimo::protocol
