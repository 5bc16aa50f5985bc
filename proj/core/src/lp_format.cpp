#include "distcl/lp_format.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "distcl/num_format.hpp"

namespace distcl {

// ---------------------------------------------------------------------------
// Writer

namespace {

std::string bound_token(double v, bool upper) {
  if (std::isinf(v)) return upper ? "+inf" : "-inf";
  return fmt_g17(v);
}

// "3 x - 2.5 y + 7"; wraps every 8 terms to keep lines auditable.
void append_expr(std::ostringstream& out, const std::vector<LinTerm>& terms,
                 double constant, const MilpModel& model) {
  int emitted = 0;
  auto sep = [&](double value) -> double {
    if (emitted == 0) {
      if (value < 0) out << "- ";
    } else {
      out << (value < 0 ? " - " : " + ");
      if (emitted % 8 == 0) out << "\n   ";
    }
    ++emitted;
    return std::abs(value);
  };
  for (const auto& t : terms) {
    double mag = sep(t.coef);
    out << fmt_g17(mag) << ' ' << model.var(t.var).name;
  }
  if (constant != 0.0 || terms.empty()) {
    double mag = sep(constant);
    out << fmt_g17(mag);
  }
}

const char* relation_token(Relation rel) {
  switch (rel) {
    case Relation::LE: return "<=";
    case Relation::GE: return ">=";
    case Relation::EQ: return "=";
  }
  return "?";
}

}  // namespace

std::string export_lp(const MilpModel& model) {
  std::vector<char> referenced(model.num_vars(), 0);
  for (const auto& t : model.objective().terms) referenced[t.var] = 1;
  for (const auto& c : model.constraints())
    for (const auto& t : c.terms) referenced[t.var] = 1;
  for (int i = 0; i < model.num_vars(); ++i)
    if (!referenced[i])
      throw std::invalid_argument("export_lp: variable '" + model.var(i).name +
                                  "' appears in no constraint or objective");

  std::ostringstream out;
  out << (model.sense() == ObjSense::Maximize ? "Maximize" : "Minimize") << '\n';
  out << " obj: ";
  append_expr(out, model.objective().terms, model.objective().constant, model);
  out << '\n';

  out << "Subject To\n";
  for (int i = 0; i < model.num_constraints(); ++i) {
    const LinConstraint& c = model.constraints()[i];
    out << " c" << i << ": ";
    append_expr(out, c.terms, 0.0, model);
    out << ' ' << relation_token(c.rel) << ' ' << fmt_g17(c.rhs) << '\n';
  }

  out << "Bounds\n";
  for (int i = 0; i < model.num_vars(); ++i) {
    const VarDef& v = model.var(i);
    out << ' ' << bound_token(v.lower, false) << " <= " << v.name << " <= "
        << bound_token(v.upper, true) << '\n';
  }

  if (model.num_binaries() > 0) {
    out << "Binaries\n";
    for (int i = 0; i < model.num_vars(); ++i)
      if (model.var(i).kind == VarKind::Binary) out << ' ' << model.var(i).name << '\n';
  }
  out << "End\n";
  return out.str();
}

void write_lp(const std::string& path, const MilpModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write LP file: " + path);
  out << export_lp(model);
}

// ---------------------------------------------------------------------------
// Parser

namespace {

struct Token {
  enum class Type { Number, Name, Op } type;
  std::string text;
  double value = 0.0;
  int line = 0;
};

bool is_name_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

std::string to_lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

class Parser {
 public:
  Parser(const std::string& text, std::string origin) : origin_(std::move(origin)) {
    tokenize(text);
  }

  [[noreturn]] void fail(int line, const std::string& msg) const {
    throw LpParseError(origin_ + ":" + std::to_string(line) + ": " + msg);
  }

  MilpModel parse() {
    split_sections();

    // Variables are declared by first appearance in the objective or a
    // constraint; Bounds/Binaries may only reference declared names.
    scan_names(objective_);
    auto rows = split_rows(subject_);
    for (auto r : rows) scan_names(r);

    std::vector<double> lo(var_order_.size(), 0.0), hi(var_order_.size(), kInf);
    std::vector<bool> is_bin(var_order_.size(), false);
    parse_bounds(lo, hi);
    parse_binaries(is_bin);

    MilpModel model;
    for (std::size_t i = 0; i < var_order_.size(); ++i) {
      if (is_bin[i])
        model.add_var(var_order_[i], VarKind::Binary, std::max(lo[i], 0.0),
                      std::min(hi[i], 1.0));
      else
        model.add_var(var_order_[i], VarKind::Continuous, lo[i], hi[i]);
    }

    LinExpr obj = parse_expression(objective_, model, nullptr, nullptr);
    model.set_objective(obj, sense_);
    for (auto r : rows) {
      Relation rel = Relation::LE;
      double rhs = 0.0;
      LinExpr lhs = parse_expression(r, model, &rel, &rhs);
      model.add_constraint(lhs.terms, rel, rhs - lhs.constant);
    }
    return model;
  }

 private:
  using Range = std::pair<std::size_t, std::size_t>;

  void tokenize(const std::string& text) {
    int line = 1;
    std::size_t i = 0;
    while (i < text.size()) {
      char c = text[i];
      if (c == '\n') {
        ++line;
        ++i;
      } else if (c == '\\') {  // comment to end of line
        while (i < text.size() && text[i] != '\n') ++i;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
      } else if (c == ':') {
        toks_.push_back({Token::Type::Op, ":", 0, line});
        ++i;
      } else if (c == '<' || c == '>' || c == '=') {
        std::string op(1, c);
        ++i;
        if (i < text.size() && text[i] == '=') {
          op += '=';
          ++i;
        }
        if (op == "<") op = "<=";
        if (op == ">") op = ">=";
        toks_.push_back({Token::Type::Op, op, 0, line});
      } else if (c == '+' || c == '-') {
        toks_.push_back({Token::Type::Op, std::string(1, c), 0, line});
        ++i;
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        std::size_t j = i;
        while (j < text.size() &&
               (std::isdigit(static_cast<unsigned char>(text[j])) || text[j] == '.' ||
                text[j] == 'e' || text[j] == 'E' ||
                ((text[j] == '+' || text[j] == '-') && j > i &&
                 (text[j - 1] == 'e' || text[j - 1] == 'E'))))
          ++j;
        std::string tok = text.substr(i, j - i);
        double v;
        if (!parse_double(tok, v)) fail(line, "unparseable number '" + tok + "'");
        toks_.push_back({Token::Type::Number, tok, v, line});
        i = j;
      } else if (is_name_start(c)) {
        std::size_t j = i;
        while (j < text.size() && is_name_char(text[j])) ++j;
        toks_.push_back({Token::Type::Name, text.substr(i, j - i), 0, line});
        i = j;
      } else {
        fail(line, std::string("unexpected character '") + c + "'");
      }
    }
  }

  // Returns token count of the section keyword at k (0 = not a keyword).
  int section_keyword(std::size_t k, std::string* name) const {
    if (k >= toks_.size() || toks_[k].type != Token::Type::Name) return 0;
    std::string w = to_lower(toks_[k].text);
    // a Name followed by ':' is a row label, never a section keyword
    if (k + 1 < toks_.size() && toks_[k + 1].type == Token::Type::Op &&
        toks_[k + 1].text == ":")
      return 0;
    if (w == "subject" && k + 1 < toks_.size() &&
        to_lower(toks_[k + 1].text) == "to") {
      *name = "subject to";
      return 2;
    }
    if (w == "st" || w == "s.t.") {
      *name = "subject to";
      return 1;
    }
    if (w == "bounds") {
      *name = "bounds";
      return 1;
    }
    if (w == "binaries" || w == "binary" || w == "bin") {
      *name = "binaries";
      return 1;
    }
    if (w == "end") {
      *name = "end";
      return 1;
    }
    if (w == "generals" || w == "general" || w == "integers" || w == "integer" ||
        w == "sos" || w == "semi-continuous" || w == "free") {
      *name = "!" + w;  // recognized but unsupported
      return 1;
    }
    return 0;
  }

  void split_sections() {
    if (toks_.empty()) fail(1, "empty LP file");
    std::string kw = to_lower(toks_[0].text);
    if (toks_[0].type == Token::Type::Name && (kw == "maximize" || kw == "max"))
      sense_ = ObjSense::Maximize;
    else if (toks_[0].type == Token::Type::Name && (kw == "minimize" || kw == "min"))
      sense_ = ObjSense::Minimize;
    else
      fail(toks_[0].line, "expected 'Maximize' or 'Minimize' at start of file");

    std::string cur = "objective";
    std::size_t start = 1, i = 1;
    bool ended = false;
    std::unordered_set<std::string> seen_sections;
    while (i < toks_.size()) {
      std::string name;
      int consumed = section_keyword(i, &name);
      if (consumed == 0) {
        ++i;
        continue;
      }
      if (name[0] == '!')
        fail(toks_[i].line, "unsupported section '" + toks_[i].text + "'");
      assign_section(cur, {start, i});
      if (!seen_sections.insert(name).second)
        fail(toks_[i].line, "duplicate section '" + name + "'");
      if (name == "end") {
        if (i + consumed < toks_.size())
          fail(toks_[i + consumed].line, "content after 'End'");
        ended = true;
        break;
      }
      cur = name;
      i += static_cast<std::size_t>(consumed);
      start = i;
    }
    if (!ended) fail(toks_.back().line, "missing 'End'");
  }

  void assign_section(const std::string& name, Range r) {
    if (name == "objective")
      objective_ = r;
    else if (name == "subject to")
      subject_ = r;
    else if (name == "bounds")
      bounds_ = r;
    else if (name == "binaries")
      binaries_ = r;
  }

  void scan_names(Range r) {
    for (std::size_t k = r.first; k < r.second; ++k) {
      const Token& t = toks_[k];
      if (t.type != Token::Type::Name) continue;
      if (k + 1 < r.second && toks_[k + 1].type == Token::Type::Op &&
          toks_[k + 1].text == ":")
        continue;  // row label
      if (!var_ids_.count(t.text)) {
        var_ids_.emplace(t.text, static_cast<int>(var_order_.size()));
        var_order_.push_back(t.text);
      }
    }
  }

  // A row ends right after "relation rhs".
  std::vector<Range> split_rows(Range r) const {
    std::vector<Range> rows;
    std::size_t k = r.first;
    while (k < r.second) {
      std::size_t row_start = k;
      bool saw_rel = false, done = false;
      while (k < r.second && !done) {
        const Token& t = toks_[k];
        if (t.type == Token::Type::Op &&
            (t.text == "<=" || t.text == ">=" || t.text == "=")) {
          saw_rel = true;
          ++k;
        } else if (saw_rel && t.type == Token::Type::Op &&
                   (t.text == "+" || t.text == "-")) {
          ++k;  // sign of the rhs
        } else if (saw_rel && t.type == Token::Type::Number) {
          ++k;
          done = true;
        } else if (saw_rel) {
          fail(t.line, "expected number after relation");
        } else {
          ++k;
        }
      }
      if (!done) fail(toks_[row_start].line, "constraint without relation and right-hand side");
      rows.push_back({row_start, k});
    }
    return rows;
  }

  LinExpr parse_expression(Range r, const MilpModel& model, Relation* rel_out,
                           double* rhs_out) const {
    LinExpr expr;
    std::size_t k = r.first;
    if (k + 1 < r.second && toks_[k].type == Token::Type::Name &&
        toks_[k + 1].type == Token::Type::Op && toks_[k + 1].text == ":")
      k += 2;  // row label

    double sign = 1.0, coef = 1.0;
    bool have_coef = false, saw_rel = false;
    for (; k < r.second; ++k) {
      const Token& t = toks_[k];
      if (t.type == Token::Type::Op) {
        if (t.text == "+") continue;
        if (t.text == "-") {
          sign = -sign;
          continue;
        }
        if (t.text == "<=" || t.text == ">=" || t.text == "=") {
          if (!rel_out) fail(t.line, "relation not allowed in the objective");
          if (have_coef) {
            expr.constant += sign * coef;
            have_coef = false;
          }
          *rel_out = t.text == "<=" ? Relation::LE
                                    : (t.text == ">=" ? Relation::GE : Relation::EQ);
          saw_rel = true;
          sign = 1.0;
          continue;
        }
        fail(t.line, "unexpected operator '" + t.text + "'");
      } else if (t.type == Token::Type::Number) {
        if (saw_rel) {
          if (rhs_out) *rhs_out = sign * t.value;
          sign = 1.0;
          continue;
        }
        if (have_coef) {
          expr.constant += sign * coef;  // previous number was a bare constant
          sign = 1.0;
        }
        coef = t.value;
        have_coef = true;
      } else {  // Name
        if (saw_rel) fail(t.line, "variable on the right-hand side");
        int id = model.find_var(t.text);
        if (id < 0) fail(t.line, "undefined variable '" + t.text + "'");
        expr.add(id, sign * (have_coef ? coef : 1.0));
        sign = 1.0;
        have_coef = false;
      }
    }
    if (have_coef) expr.constant += sign * coef;
    if (rel_out && !saw_rel)
      fail(toks_[r.first].line, "constraint missing relation");
    return expr;
  }

  int lookup_declared(const Token& t, const char* where) const {
    auto it = var_ids_.find(t.text);
    if (it == var_ids_.end())
      fail(t.line, std::string("undefined variable '") + t.text + "' in " + where);
    return it->second;
  }

  void parse_bounds(std::vector<double>& lo, std::vector<double>& hi) const {
    std::size_t k = bounds_.first;
    auto bound_value = [&](std::size_t& j, int line) -> double {
      double sign = 1.0;
      while (j < bounds_.second && toks_[j].type == Token::Type::Op &&
             (toks_[j].text == "+" || toks_[j].text == "-")) {
        if (toks_[j].text == "-") sign = -sign;
        ++j;
      }
      if (j >= bounds_.second) fail(line, "truncated bound");
      const Token& t = toks_[j];
      if (t.type == Token::Type::Number) {
        ++j;
        return sign * t.value;
      }
      if (t.type == Token::Type::Name && to_lower(t.text) == "inf") {
        ++j;
        return sign * kInf;
      }
      fail(t.line, "expected bound value, found '" + t.text + "'");
    };

    while (k < bounds_.second) {
      int line = toks_[k].line;
      const Token& first = toks_[k];
      bool starts_with_value =
          first.type == Token::Type::Number ||
          (first.type == Token::Type::Op && (first.text == "+" || first.text == "-")) ||
          (first.type == Token::Type::Name && to_lower(first.text) == "inf");
      if (starts_with_value) {
        double l = bound_value(k, line);
        if (k >= bounds_.second || toks_[k].text != "<=")
          fail(line, "expected '<=' after lower bound");
        ++k;
        if (k >= bounds_.second) fail(line, "truncated bound");
        int id = lookup_declared(toks_[k], "Bounds");
        ++k;
        if (k >= bounds_.second || toks_[k].text != "<=")
          fail(line, "expected '<=' after variable in bound");
        ++k;
        double u = bound_value(k, line);
        lo[static_cast<std::size_t>(id)] = l;
        hi[static_cast<std::size_t>(id)] = u;
      } else {
        if (first.type != Token::Type::Name)
          fail(line, "expected variable name in Bounds");
        int id = lookup_declared(first, "Bounds");
        ++k;
        if (k >= bounds_.second || toks_[k].type != Token::Type::Op)
          fail(line, "expected relation in bound");
        std::string op = toks_[k].text;
        ++k;
        double v = bound_value(k, line);
        if (op == "<=")
          hi[static_cast<std::size_t>(id)] = v;
        else if (op == ">=")
          lo[static_cast<std::size_t>(id)] = v;
        else if (op == "=")
          lo[static_cast<std::size_t>(id)] = hi[static_cast<std::size_t>(id)] = v;
        else
          fail(line, "unexpected operator '" + op + "' in bound");
      }
    }
  }

  void parse_binaries(std::vector<bool>& is_bin) const {
    for (std::size_t k = binaries_.first; k < binaries_.second; ++k) {
      const Token& t = toks_[k];
      if (t.type != Token::Type::Name)
        fail(t.line, "expected variable name in Binaries");
      is_bin[static_cast<std::size_t>(lookup_declared(t, "Binaries"))] = true;
    }
  }

  std::vector<Token> toks_;
  std::string origin_;
  ObjSense sense_ = ObjSense::Minimize;
  Range objective_{0, 0}, subject_{0, 0}, bounds_{0, 0}, binaries_{0, 0};
  std::vector<std::string> var_order_;
  std::unordered_map<std::string, int> var_ids_;
};

}  // namespace

MilpModel import_lp(const std::string& text, const std::string& origin) {
  Parser parser(text, origin);
  return parser.parse();
}

MilpModel read_lp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open LP file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return import_lp(ss.str(), path);
}

}  // namespace distcl
