#include <algorithm>
#include <cctype>
#include <map>

#include "larc/dsl.hpp"
#include "larc/error.hpp"

namespace larc {

Program Program::scene() {
  static const auto kLeaf = std::make_shared<const Node>();
  return Program(kLeaf);
}

Program Program::filter(Program child, std::string name) {
  auto node = std::make_shared<Node>();
  node->kind = NodeKind::kFilter;
  node->name = std::move(name);
  node->children.push_back(std::move(child));
  return Program(std::move(node));
}

Program Program::relate(Program target, Program anchor, std::string name,
                        bool negated) {
  auto node = std::make_shared<Node>();
  node->kind = NodeKind::kRelate;
  node->name = std::move(name);
  node->negated = negated;
  node->children = {std::move(target), std::move(anchor)};
  return Program(std::move(node));
}

Program Program::relate_ternary(Program target, Program anchor1, Program anchor2,
                                std::string name, bool negated) {
  auto node = std::make_shared<Node>();
  node->kind = NodeKind::kRelateTernary;
  node->name = std::move(name);
  node->negated = negated;
  node->children = {std::move(target), std::move(anchor1), std::move(anchor2)};
  return Program(std::move(node));
}

std::size_t Program::size() const {
  std::size_t n = 1;
  for (const auto& c : children()) n += c.size();
  return n;
}

std::size_t Program::depth() const {
  std::size_t d = 0;
  for (const auto& c : children()) d = std::max(d, c.depth());
  return d + 1;
}

bool operator==(const Program& a, const Program& b) {
  if (a.node_ == b.node_) return true;
  if (a.kind() != b.kind() || a.name() != b.name() || a.negated() != b.negated()) {
    return false;
  }
  return std::equal(a.children().begin(), a.children().end(),
                    b.children().begin(), b.children().end());
}

bool is_concept_identifier(std::string_view name) {
  if (name.empty()) return false;
  if (!(std::islower(static_cast<unsigned char>(name[0])) || name[0] == '_')) {
    return false;
  }
  return std::all_of(name.begin(), name.end(), [](char c) {
    const auto u = static_cast<unsigned char>(c);
    return std::islower(u) || std::isdigit(u) || c == '_';
  });
}

std::string normalize_concept(std::string_view raw) {
  std::string out;
  bool pending_sep = false;
  for (char c : raw) {
    const auto u = static_cast<unsigned char>(c);
    if (c == ' ' || c == '-' || c == '_' || c == '\t') {
      pending_sep = !out.empty();
      continue;
    }
    if (pending_sep) {
      out.push_back('_');
      pending_sep = false;
    }
    out.push_back(static_cast<char>(std::tolower(u)));
  }
  if (!is_concept_identifier(out)) {
    fail(ErrorCode::kInvalidArguments,
         "'" + std::string(raw) + "' is not a valid concept name");
  }
  return out;
}

ConceptVocabulary extract_concepts(std::span<const Program> corpus) {
  ConceptVocabulary vocab;
  std::map<std::string, int> arity_of;
  auto record = [&](const std::string& name, int arity) {
    auto [it, inserted] = arity_of.emplace(name, arity);
    if (!inserted && it->second != arity) {
      fail(ErrorCode::kConflictingArity,
           "concept '" + name + "' used with arity " + std::to_string(it->second) +
               " and " + std::to_string(arity));
    }
  };
  for (const Program& program : corpus) {
    visit(program, [&](const Program& node) {
      switch (node.kind()) {
        case NodeKind::kScene:
          break;
        case NodeKind::kFilter:
          record(node.name(), 1);
          vocab.unary.insert(node.name());
          break;
        case NodeKind::kRelate:
          record(node.name(), 2);
          vocab.binary.insert(node.name());
          break;
        case NodeKind::kRelateTernary:
          record(node.name(), 3);
          vocab.ternary.insert(node.name());
          break;
      }
    });
  }
  return vocab;
}

// ---------------------------------------------------------------------------
// Surface syntax.

namespace {

struct Arg {
  bool is_program = false;
  Program program = Program::scene();
  std::string name;
  bool negated = false;
  std::size_t offset = 0;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Program parse() {
    Program p = parse_call();
    skip_ws();
    if (pos_ != text_.size()) error("unexpected trailing input");
    return p;
  }

 private:
  [[noreturn]] void error(const std::string& msg) const { throw ParseError(pos_, msg); }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= text_.size()) error(std::string("expected '") + c + "', got end of input");
    if (text_[pos_] != c) {
      error(std::string("expected '") + c + "', got '" + text_[pos_] + "'");
    }
    ++pos_;
  }

  std::string identifier() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size()) {
      const auto u = static_cast<unsigned char>(text_[pos_]);
      if (std::isalnum(u) || text_[pos_] == '_') {
        ++pos_;
      } else {
        break;
      }
    }
    if (start == pos_) error("expected identifier");
    if (std::isdigit(static_cast<unsigned char>(text_[start]))) {
      pos_ = start;
      error("identifier may not start with a digit");
    }
    std::string id(text_.substr(start, pos_ - start));
    std::transform(id.begin(), id.end(), id.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return id;
  }

  Arg argument() {
    skip_ws();
    Arg arg;
    arg.offset = pos_;
    std::string id = identifier();
    if (peek('(')) {
      pos_ = arg.offset;
      arg.is_program = true;
      arg.program = parse_call();
      return arg;
    }
    if (id == "not") {
      arg.negated = true;
      id = identifier();
      if (peek('(')) error("'not' applies to a concept name, not a program");
    }
    arg.name = std::move(id);
    return arg;
  }

  Program parse_call() {
    skip_ws();
    const std::size_t start = pos_;
    const std::string op = identifier();
    expect('(');
    std::vector<Arg> args;
    if (!peek(')')) {
      args.push_back(argument());
      while (peek(',')) {
        ++pos_;
        args.push_back(argument());
      }
    }
    expect(')');

    auto arity_error = [&](std::size_t want) {
      throw ParseError(start, op + " expects " + std::to_string(want) +
                                  " arguments, got " + std::to_string(args.size()));
    };
    auto need_program = [&](const Arg& a) -> const Program& {
      if (!a.is_program) {
        throw ParseError(a.offset, op + ": expected a program, got concept '" + a.name + "'");
      }
      return a.program;
    };
    auto need_concept = [&](const Arg& a, bool allow_not) {
      if (a.is_program) throw ParseError(a.offset, op + ": expected a concept name");
      if (a.negated && !allow_not) {
        throw ParseError(a.offset, op + ": 'not' is only allowed in relate forms");
      }
    };

    if (op == "scene") {
      if (!args.empty()) arity_error(0);
      return Program::scene();
    }
    if (op == "filter") {
      if (args.size() != 2) arity_error(2);
      need_concept(args[1], false);
      return Program::filter(need_program(args[0]), args[1].name);
    }
    if (op == "relate") {
      if (args.size() != 3) arity_error(3);
      need_concept(args[2], true);
      return Program::relate(need_program(args[0]), need_program(args[1]),
                             args[2].name, args[2].negated);
    }
    if (op == "relate_ternary") {
      if (args.size() != 4) arity_error(4);
      need_concept(args[3], true);
      return Program::relate_ternary(need_program(args[0]), need_program(args[1]),
                                     need_program(args[2]), args[3].name,
                                     args[3].negated);
    }
    throw ParseError(start, "unknown operation '" + op + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

void print_into(const Program& p, std::string& out) {
  auto concept_slot = [&] {
    if (p.negated()) out += "not ";
    out += p.name();
  };
  switch (p.kind()) {
    case NodeKind::kScene:
      out += "scene()";
      return;
    case NodeKind::kFilter:
      out += "filter(";
      print_into(p.children()[0], out);
      out += ", ";
      out += p.name();
      out += ')';
      return;
    case NodeKind::kRelate:
    case NodeKind::kRelateTernary:
      out += p.kind() == NodeKind::kRelate ? "relate(" : "relate_ternary(";
      for (const Program& c : p.children()) {
        print_into(c, out);
        out += ", ";
      }
      concept_slot();
      out += ')';
      return;
  }
}

}  // namespace

Program parse_program(std::string_view text) { return Parser(text).parse(); }

std::string print_program(const Program& program) {
  std::string out;
  print_into(program, out);
  return out;
}

}  // namespace larc
