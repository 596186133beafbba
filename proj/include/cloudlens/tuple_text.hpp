#pragma once

// Line-oriented text form of relation tuples:
//
//   # comment
//   (id3 u1 belongsTo g1)
//   (ds3 u1 s3_GetObject bucket)
//   (id4 actor subject hasPolicy policy)
//   (ds4 actor subject s3_PutObject bucket)

#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cloudlens/error.hpp"
#include "cloudlens/model.hpp"

namespace cloudlens {

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace detail

/// Checks slot kinds of a tuple against the world. Returns an empty string
/// when valid, otherwise a description of the first violation.
inline std::string tuple_slot_violation(const World& w, const RelTuple& t) {
  auto identity_or_any_user = [&](EntityIx e) { return w.is_identity(e) || e == w.any_user(); };
  auto datastore_or_any = [&](EntityIx e) { return w.is_datastore(e) || e == w.any_datastore(); };
  const auto& info = w.vocab().info(t.perm);
  if (!identity_or_any_user(t.holder)) return "holder '" + w.name(t.holder) + "' is not an identity";
  if (w.kind(t.holder) == EntityKind::Policy)
    return "policy '" + w.name(t.holder) + "' cannot hold permissions";
  if (is_four(t.kind)) {
    if (!identity_or_any_user(t.subject))
      return "subject '" + w.name(t.subject) + "' is not an identity";
    if (w.kind(t.subject) == EntityKind::Policy)
      return "policy '" + w.name(t.subject) + "' cannot hold permissions";
  }
  if (targets_datastore(t.kind)) {
    if (!datastore_or_any(t.target)) return "target '" + w.name(t.target) + "' is not a datastore";
    if (info.family == PermFamily::Identity)
      return "permission '" + info.token + "' does not apply to datastores";
  } else {
    if (!identity_or_any_user(t.target)) return "target '" + w.name(t.target) + "' is not an identity";
    if (info.family == PermFamily::Datastore)
      return "permission '" + info.token + "' does not apply to identities";
  }
  return {};
}

/// Parses one tuple line (no comments). Throws ParseError tagged `line_no`.
inline RelTuple parse_tuple_line(std::string_view line, const World& w, std::size_t line_no = 1) {
  auto body = detail::trim(line);
  if (body.empty() || body.front() != '(') throw ParseError(line_no, "expected '('");
  if (body.back() != ')') throw ParseError(line_no, "unterminated parenthesis");
  body = body.substr(1, body.size() - 2);
  if (body.find_first_of("()") != std::string_view::npos)
    throw ParseError(line_no, "nested parenthesis");
  auto fields = detail::split_ws(body);
  if (fields.empty()) throw ParseError(line_no, "empty tuple");

  TupleKind kind;
  std::size_t arity;
  if (fields[0] == "id3") {
    kind = TupleKind::Id3, arity = 3;
  } else if (fields[0] == "ds3") {
    kind = TupleKind::Ds3, arity = 3;
  } else if (fields[0] == "id4") {
    kind = TupleKind::Id4, arity = 4;
  } else if (fields[0] == "ds4") {
    kind = TupleKind::Ds4, arity = 4;
  } else {
    throw ParseError(line_no, "unknown tuple kind '" + std::string(fields[0]) + "'");
  }
  if (fields.size() != arity + 1)
    throw ParseError(line_no, std::string(fields[0]) + " expects " + std::to_string(arity) +
                                  " fields, got " + std::to_string(fields.size() - 1));

  auto entity = [&](std::string_view name) {
    if (auto e = w.find(name)) return *e;
    throw ParseError(line_no, "unknown entity '" + std::string(name) + "'");
  };
  auto perm = [&](std::string_view token) {
    if (auto p = w.vocab().find(token)) return *p;
    throw ParseError(line_no, "unknown permission token '" + std::string(token) + "'");
  };

  RelTuple t;
  if (arity == 3) {
    t = RelTuple{kind, entity(fields[1]), kNoEntity, perm(fields[2]), entity(fields[3])};
  } else {
    t = RelTuple{kind, entity(fields[1]), entity(fields[2]), perm(fields[3]), entity(fields[4])};
  }
  if (auto why = tuple_slot_violation(w, t); !why.empty()) throw ParseError(line_no, why);
  return t;
}

inline std::string format_tuple_line(const World& w, const RelTuple& t) {
  std::string out = "(";
  out += to_string(t.kind);
  out += ' ';
  out += w.name(t.holder);
  if (is_four(t.kind)) {
    out += ' ';
    out += w.name(t.subject);
  }
  out += ' ';
  out += w.vocab().token(t.perm);
  out += ' ';
  out += w.name(t.target);
  out += ')';
  return out;
}

/// Reads a whole tuple file into a state; `#` lines and blank lines are skipped.
inline IamState parse_tuple_file(std::string_view text, const World& w) {
  IamState state;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    auto line = detail::trim(text.substr(start, end - start));
    if (!line.empty() && line.front() != '#') state.add_tuple(parse_tuple_line(line, w, line_no));
    start = end + 1;
  }
  return state;
}

/// Canonical text of a state's tuples: one line each, in state order.
inline std::string format_tuple_file(const World& w, const IamState& s) {
  std::string out;
  for (const auto& t : s.tuples()) {
    out += format_tuple_line(w, t);
    out += '\n';
  }
  return out;
}

}  // namespace cloudlens
