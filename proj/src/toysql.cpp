#include "kidlab/toysql.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "kidlab/grammar_pool.hpp"
#include "kidlab/rng.hpp"
#include "kidlab/tokenizer.hpp"

namespace kidlab {

namespace {

// Tags for deriving independent RNG streams from one world seed.
constexpr uint64_t kSchemaStream = 0x5c11;
constexpr uint64_t kExampleStream = 0xe4a3;
constexpr uint64_t kDbStream = 0xdb01;
constexpr uint64_t kRowStream = 0x2073;

}  // namespace

// ---------------------------------------------------------------------------
// Values
// ---------------------------------------------------------------------------

int value_compare(const Value& a, const Value& b) {
  if (a.index() != b.index()) return a.index() < b.index() ? -1 : 1;
  if (std::holds_alternative<int64_t>(a)) {
    int64_t x = std::get<int64_t>(a), y = std::get<int64_t>(b);
    return x < y ? -1 : x > y ? 1 : 0;
  }
  const std::string& x = std::get<std::string>(a);
  const std::string& y = std::get<std::string>(b);
  return x < y ? -1 : x > y ? 1 : 0;
}

// ---------------------------------------------------------------------------
// Databases
// ---------------------------------------------------------------------------

Database build_database(const Schema& schema, uint64_t db_seed) {
  Database db;
  db.schema = schema;
  db.seed = db_seed;
  db.rows.resize(schema.tables.size());

  const auto& pool_text = [] {
    std::vector<std::string> p;
    for (const char* t : kTablePool) p.emplace_back(t);
    for (const char* t : kColumnPool) p.emplace_back(t);
    return p;
  }();

  for (size_t ti = 0; ti < schema.tables.size(); ++ti) {
    const TableDef& table = schema.tables[ti];
    Rng rng(hash_seed(db_seed, kRowStream, ti));
    int n_rows = rng.next_int(3, 20);
    for (int r = 0; r < n_rows; ++r) {
      Row row;
      for (const ColumnDef& col : table.columns) {
        if (col.type == ColType::Integer) {
          row.emplace_back(int64_t(rng.next_int(0, 99)));
        } else {
          row.emplace_back(pool_text[rng.next_below(pool_text.size())]);
        }
      }
      db.rows[ti].push_back(std::move(row));
    }
  }

  // Make most child FK cells reference existing parent values so joins hit.
  if (schema.fk && schema.tables.size() == 2) {
    int parent_idx = -1, child_idx = -1;
    for (size_t c = 0; c < schema.tables[0].columns.size(); ++c)
      if (schema.tables[0].columns[c].name == schema.fk->parent_col)
        parent_idx = int(c);
    for (size_t c = 0; c < schema.tables[1].columns.size(); ++c)
      if (schema.tables[1].columns[c].name == schema.fk->child_col)
        child_idx = int(c);
    if (parent_idx >= 0 && child_idx >= 0 && !db.rows[0].empty()) {
      Rng rng(hash_seed(db_seed, kRowStream, 0xf1));
      for (Row& row : db.rows[1]) {
        if (rng.next_real() < 0.9) {
          const Row& parent = db.rows[0][rng.next_below(db.rows[0].size())];
          row[size_t(child_idx)] = parent[size_t(parent_idx)];
        }
      }
    }
  }
  return db;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

namespace {

const char* agg_name(AggFn fn) {
  switch (fn) {
    case AggFn::Count: return "COUNT";
    case AggFn::Max: return "MAX";
    case AggFn::Min: return "MIN";
    case AggFn::Sum: return "SUM";
  }
  return "?";
}

const char* op_name(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return "=";
    case CmpOp::Lt: return "<";
    case CmpOp::Gt: return ">";
    case CmpOp::Ne: return "!=";
  }
  return "?";
}

std::string literal_text(const Value& v) {
  if (std::holds_alternative<int64_t>(v))
    return std::to_string(std::get<int64_t>(v));
  return std::get<std::string>(v);
}

}  // namespace

std::string render_sql(const QueryAst& ast) {
  std::vector<std::string> toks;
  toks.emplace_back("SELECT");
  for (size_t i = 0; i < ast.select.size(); ++i) {
    if (i > 0) toks.emplace_back(",");
    const SelectItem& item = ast.select[i];
    if (item.agg) {
      toks.emplace_back(agg_name(*item.agg));
      toks.emplace_back("(");
      toks.push_back(item.column);
      toks.emplace_back(")");
    } else {
      toks.push_back(item.column);
    }
  }
  toks.emplace_back("FROM");
  toks.push_back(ast.from);
  if (ast.join) {
    toks.emplace_back("JOIN");
    toks.push_back(ast.join->table);
    toks.emplace_back("ON");
    toks.push_back(ast.join->left_col);
    toks.emplace_back("=");
    toks.push_back(ast.join->right_col);
  }
  for (size_t i = 0; i < ast.where.size(); ++i) {
    toks.emplace_back(i == 0 ? "WHERE" : "AND");
    toks.push_back(ast.where[i].column);
    toks.emplace_back(op_name(ast.where[i].op));
    toks.push_back(literal_text(ast.where[i].literal));
  }
  if (ast.order_by) {
    toks.emplace_back("ORDER");
    toks.emplace_back("BY");
    toks.push_back(ast.order_by->column);
    toks.emplace_back(ast.order_by->descending ? "DESC" : "ASC");
  }
  if (ast.limit) {
    toks.emplace_back("LIMIT");
    toks.push_back(std::to_string(*ast.limit));
  }
  return Vocabulary::join_tokens(toks);
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace {

bool is_identifier(const std::string& t) {
  if (t.empty()) return false;
  for (char c : t)
    if (!std::islower(static_cast<unsigned char>(c))) return false;
  return true;
}

bool is_integer(const std::string& t) {
  if (t.empty()) return false;
  for (char c : t)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

struct Cursor {
  const std::vector<std::string>& toks;
  int pos = 0;

  bool done() const { return pos >= int(toks.size()); }
  const std::string& peek() const {
    static const std::string kEnd = "<end>";
    return done() ? kEnd : toks[size_t(pos)];
  }
  bool accept(const char* kw) {
    if (!done() && toks[size_t(pos)] == kw) {
      ++pos;
      return true;
    }
    return false;
  }
};

#define PARSE_FAIL(cursor, msg) \
  return ParseError{(cursor).pos, (msg)}

std::variant<QueryAst, ParseError> parse_tokens(
    const std::vector<std::string>& toks) {
  Cursor c{toks};
  QueryAst ast;

  if (!c.accept("SELECT")) PARSE_FAIL(c, "expected SELECT");

  bool first = true;
  bool agg_list = false;
  do {
    const std::string& t = c.peek();
    bool is_agg = t == "COUNT" || t == "MAX" || t == "MIN" || t == "SUM";
    if (first) {
      agg_list = is_agg;
    } else if (is_agg != agg_list) {
      PARSE_FAIL(c, "aggregates and bare columns cannot be mixed");
    }
    if (is_agg) {
      AggFn fn = t == "COUNT"  ? AggFn::Count
                 : t == "MAX"  ? AggFn::Max
                 : t == "MIN"  ? AggFn::Min
                               : AggFn::Sum;
      ++c.pos;
      if (!c.accept("(")) PARSE_FAIL(c, "expected ( after aggregate");
      if (!is_identifier(c.peek())) PARSE_FAIL(c, "expected column name");
      std::string col = c.peek();
      ++c.pos;
      if (!c.accept(")")) PARSE_FAIL(c, "expected )");
      ast.select.push_back({fn, col});
    } else {
      if (!is_identifier(t)) PARSE_FAIL(c, "expected column name");
      ast.select.push_back({std::nullopt, t});
      ++c.pos;
    }
    first = false;
  } while (c.accept(","));

  if (!c.accept("FROM")) PARSE_FAIL(c, "expected FROM");
  if (!is_identifier(c.peek())) PARSE_FAIL(c, "expected table name");
  ast.from = c.peek();
  ++c.pos;

  if (c.accept("JOIN")) {
    JoinClause join;
    if (!is_identifier(c.peek())) PARSE_FAIL(c, "expected table name");
    join.table = c.peek();
    ++c.pos;
    if (!c.accept("ON")) PARSE_FAIL(c, "expected ON");
    if (!is_identifier(c.peek())) PARSE_FAIL(c, "expected column name");
    join.left_col = c.peek();
    ++c.pos;
    if (!c.accept("=")) PARSE_FAIL(c, "expected = in join condition");
    if (!is_identifier(c.peek())) PARSE_FAIL(c, "expected column name");
    join.right_col = c.peek();
    ++c.pos;
    ast.join = join;
  }

  if (c.accept("WHERE")) {
    for (int n = 0;; ++n) {
      if (n == 2) PARSE_FAIL(c, "at most two predicates");
      Predicate pred;
      if (!is_identifier(c.peek())) PARSE_FAIL(c, "expected column name");
      pred.column = c.peek();
      ++c.pos;
      const std::string& op = c.peek();
      if (op == "=") pred.op = CmpOp::Eq;
      else if (op == "<") pred.op = CmpOp::Lt;
      else if (op == ">") pred.op = CmpOp::Gt;
      else if (op == "!=") pred.op = CmpOp::Ne;
      else PARSE_FAIL(c, "expected comparison operator");
      ++c.pos;
      const std::string& lit = c.peek();
      if (is_integer(lit)) {
        pred.literal = Value(int64_t(std::stoll(lit)));
      } else if (is_identifier(lit)) {
        pred.literal = Value(lit);
      } else {
        PARSE_FAIL(c, "expected literal");
      }
      ++c.pos;
      ast.where.push_back(std::move(pred));
      if (!c.accept("AND")) break;
    }
  }

  if (c.accept("ORDER")) {
    if (!c.accept("BY")) PARSE_FAIL(c, "expected BY");
    OrderBy order;
    if (!is_identifier(c.peek())) PARSE_FAIL(c, "expected column name");
    order.column = c.peek();
    ++c.pos;
    if (c.accept("ASC")) order.descending = false;
    else if (c.accept("DESC")) order.descending = true;
    else PARSE_FAIL(c, "expected ASC or DESC");
    ast.order_by = order;
  }

  if (c.accept("LIMIT")) {
    const std::string& lit = c.peek();
    if (!is_integer(lit)) PARSE_FAIL(c, "expected limit count");
    int64_t n = std::stoll(lit);
    if (n <= 0) PARSE_FAIL(c, "limit must be positive");
    ast.limit = n;
    ++c.pos;
  }

  if (!c.done()) PARSE_FAIL(c, "trailing tokens");
  return ast;
}

#undef PARSE_FAIL

}  // namespace

std::variant<QueryAst, ParseError> parse_sql(const std::string& text) {
  return parse_tokens(Vocabulary::split_text(text));
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

namespace {

struct Scope {
  std::vector<std::string> column_names;  // combined, FROM table first
  std::vector<Row> rows;                  // combined working rows

  std::optional<int> find(const std::string& name) const {
    for (size_t i = 0; i < column_names.size(); ++i)
      if (column_names[i] == name) return int(i);
    return std::nullopt;
  }
};

bool predicate_holds(const Predicate& pred, const Row& row, int col_idx) {
  int cmp = value_compare(row[size_t(col_idx)], pred.literal);
  switch (pred.op) {
    case CmpOp::Eq: return cmp == 0;
    case CmpOp::Lt: return cmp < 0;
    case CmpOp::Gt: return cmp > 0;
    case CmpOp::Ne: return cmp != 0;
  }
  return false;
}

}  // namespace

std::variant<ResultSet, ExecError> execute(const QueryAst& ast,
                                           const Database& db) {
  const Schema& schema = db.schema;

  auto table_index = [&](const std::string& name) -> std::optional<int> {
    for (size_t t = 0; t < schema.tables.size(); ++t)
      if (schema.tables[t].name == name) return int(t);
    return std::nullopt;
  };

  auto from_idx = table_index(ast.from);
  if (!from_idx) return ExecError{ast.from};

  Scope scope;
  for (const ColumnDef& col : schema.tables[size_t(*from_idx)].columns)
    scope.column_names.push_back(col.name);

  if (ast.join) {
    auto join_idx = table_index(ast.join->table);
    if (!join_idx) return ExecError{ast.join->table};
    int left = -1;
    for (size_t i = 0; i < scope.column_names.size(); ++i)
      if (scope.column_names[i] == ast.join->left_col) left = int(i);
    if (left < 0) return ExecError{ast.join->left_col};
    const TableDef& jt = schema.tables[size_t(*join_idx)];
    int right = -1;
    for (size_t i = 0; i < jt.columns.size(); ++i)
      if (jt.columns[i].name == ast.join->right_col) right = int(i);
    if (right < 0) return ExecError{ast.join->right_col};
    for (const ColumnDef& col : jt.columns)
      scope.column_names.push_back(col.name);
    for (const Row& a : db.rows[size_t(*from_idx)]) {
      for (const Row& b : db.rows[size_t(*join_idx)]) {
        if (value_compare(a[size_t(left)], b[size_t(right)]) != 0) continue;
        Row merged = a;
        merged.insert(merged.end(), b.begin(), b.end());
        scope.rows.push_back(std::move(merged));
      }
    }
  } else {
    scope.rows = db.rows[size_t(*from_idx)];
  }

  // Resolve every referenced column before touching data.
  std::vector<int> where_cols;
  for (const Predicate& pred : ast.where) {
    auto idx = scope.find(pred.column);
    if (!idx) return ExecError{pred.column};
    where_cols.push_back(*idx);
  }
  std::vector<int> select_cols;
  for (const SelectItem& item : ast.select) {
    auto idx = scope.find(item.column);
    if (!idx) return ExecError{item.column};
    select_cols.push_back(*idx);
  }
  int order_col = -1;
  if (ast.order_by) {
    auto idx = scope.find(ast.order_by->column);
    if (!idx) return ExecError{ast.order_by->column};
    order_col = *idx;
  }

  std::vector<Row> filtered;
  for (Row& row : scope.rows) {
    bool keep = true;
    for (size_t p = 0; p < ast.where.size(); ++p)
      keep = keep && predicate_holds(ast.where[p], row, where_cols[p]);
    if (keep) filtered.push_back(std::move(row));
  }

  if (ast.order_by) {
    bool desc = ast.order_by->descending;
    std::stable_sort(filtered.begin(), filtered.end(),
                     [&](const Row& a, const Row& b) {
                       int cmp = value_compare(a[size_t(order_col)],
                                               b[size_t(order_col)]);
                       return desc ? cmp > 0 : cmp < 0;
                     });
  }

  ResultSet rs;
  rs.ordered = ast.order_by.has_value();

  bool is_agg = !ast.select.empty() && ast.select[0].agg.has_value();
  if (is_agg) {
    Row out;
    bool undefined = false;  // MAX/MIN over an empty input has no value
    for (size_t i = 0; i < ast.select.size(); ++i) {
      const SelectItem& item = ast.select[i];
      int col = select_cols[i];
      rs.columns.push_back(std::string(agg_name(*item.agg)) + "(" +
                           item.column + ")");
      switch (*item.agg) {
        case AggFn::Count:
          out.emplace_back(int64_t(filtered.size()));
          break;
        case AggFn::Sum: {
          int64_t sum = 0;
          for (const Row& row : filtered)
            if (std::holds_alternative<int64_t>(row[size_t(col)]))
              sum += std::get<int64_t>(row[size_t(col)]);
          out.emplace_back(sum);
          break;
        }
        case AggFn::Max:
        case AggFn::Min: {
          if (filtered.empty()) {
            undefined = true;
            break;
          }
          Value best = filtered[0][size_t(col)];
          for (const Row& row : filtered) {
            int cmp = value_compare(row[size_t(col)], best);
            if (*item.agg == AggFn::Max ? cmp > 0 : cmp < 0)
              best = row[size_t(col)];
          }
          out.push_back(best);
          break;
        }
      }
    }
    if (!undefined) rs.rows.push_back(std::move(out));
  } else {
    for (const SelectItem& item : ast.select) rs.columns.push_back(item.column);
    for (const Row& row : filtered) {
      Row out;
      for (int col : select_cols) out.push_back(row[size_t(col)]);
      rs.rows.push_back(std::move(out));
    }
  }

  if (ast.limit && int64_t(rs.rows.size()) > *ast.limit)
    rs.rows.resize(size_t(*ast.limit));

  return rs;
}

bool result_sets_equal(const ResultSet& predicted, const ResultSet& gold) {
  if (predicted.columns.size() != gold.columns.size()) return false;
  if (predicted.rows.size() != gold.rows.size()) return false;
  auto row_less = [](const Row& a, const Row& b) {
    for (size_t i = 0; i < a.size() && i < b.size(); ++i) {
      int cmp = value_compare(a[i], b[i]);
      if (cmp != 0) return cmp < 0;
    }
    return a.size() < b.size();
  };
  if (gold.ordered) return predicted.rows == gold.rows;
  std::vector<Row> a = predicted.rows, b = gold.rows;
  std::sort(a.begin(), a.end(), row_less);
  std::sort(b.begin(), b.end(), row_less);
  return a == b;
}

// ---------------------------------------------------------------------------
// Prompts
// ---------------------------------------------------------------------------

std::string serialize_prompt(const Schema& schema,
                             const std::string& question) {
  std::vector<std::string> toks;
  for (const TableDef& table : schema.tables) {
    toks.push_back(table.name);
    toks.emplace_back("(");
    for (const ColumnDef& col : table.columns) toks.push_back(col.name);
    toks.emplace_back(")");
  }
  if (schema.fk) {
    toks.emplace_back("fk");
    toks.push_back(schema.fk->parent_col);
    toks.emplace_back("=");
    toks.push_back(schema.fk->child_col);
  }
  toks.emplace_back("ask");
  for (const std::string& w : Vocabulary::split_text(question))
    toks.push_back(w);
  return Vocabulary::join_tokens(toks);
}

// ---------------------------------------------------------------------------
// World generation
// ---------------------------------------------------------------------------

namespace {

constexpr int kNumSchemas = 24;

Schema generate_schema(uint64_t world_seed, int index) {
  Rng rng(hash_seed(world_seed, kSchemaStream, uint64_t(index)));
  Schema schema;
  int n_tables = rng.next_real() < 0.55 ? 2 : 1;

  std::vector<int> table_ids(kTablePool.size());
  for (size_t i = 0; i < table_ids.size(); ++i) table_ids[i] = int(i);
  std::vector<int> col_ids(kColumnPool.size());
  for (size_t i = 0; i < col_ids.size(); ++i) col_ids[i] = int(i);
  // Fisher-Yates
  for (int i = int(table_ids.size()) - 1; i > 0; --i)
    std::swap(table_ids[size_t(i)], table_ids[rng.next_below(uint64_t(i) + 1)]);
  for (int i = int(col_ids.size()) - 1; i > 0; --i)
    std::swap(col_ids[size_t(i)], col_ids[rng.next_below(uint64_t(i) + 1)]);

  int next_col = 0;
  for (int t = 0; t < n_tables; ++t) {
    TableDef table;
    table.name = kTablePool[size_t(table_ids[size_t(t)])];
    int n_cols = rng.next_int(2, 5);
    bool has_int = false;
    for (int ci = 0; ci < n_cols; ++ci) {
      ColumnDef col;
      col.name = kColumnPool[size_t(col_ids[size_t(next_col++)])];
      col.type = rng.next_real() < 0.65 ? ColType::Integer : ColType::Text;
      has_int = has_int || col.type == ColType::Integer;
      table.columns.push_back(std::move(col));
    }
    if (!has_int) table.columns[0].type = ColType::Integer;
    schema.tables.push_back(std::move(table));
  }

  if (n_tables == 2 && rng.next_real() < 0.85) {
    std::vector<const ColumnDef*> parent_ints, child_ints;
    for (const ColumnDef& c : schema.tables[0].columns)
      if (c.type == ColType::Integer) parent_ints.push_back(&c);
    for (const ColumnDef& c : schema.tables[1].columns)
      if (c.type == ColType::Integer) child_ints.push_back(&c);
    schema.fk =
        ForeignKey{parent_ints[rng.next_below(parent_ints.size())]->name,
                   child_ints[rng.next_below(child_ints.size())]->name};
  }
  return schema;
}

struct QuestionDraft {
  std::string question;
  QueryAst ast;
};

std::string op_phrase(CmpOp op) {
  switch (op) {
    case CmpOp::Gt: return "greater than";
    case CmpOp::Lt: return "less than";
    case CmpOp::Eq: return "equal to";
    case CmpOp::Ne: return "not equal to";
  }
  return "";
}

// Columns visible to a query: FROM table first, then the joined table.
std::vector<const ColumnDef*> visible_columns(const Schema& schema,
                                              bool joined) {
  std::vector<const ColumnDef*> cols;
  for (const ColumnDef& c : schema.tables[0].columns) cols.push_back(&c);
  if (joined)
    for (const ColumnDef& c : schema.tables[1].columns) cols.push_back(&c);
  return cols;
}

Predicate draw_predicate(const ColumnDef& col, Rng& rng) {
  Predicate pred;
  pred.column = col.name;
  if (col.type == ColType::Integer) {
    int pick = rng.next_int(0, 3);
    pred.op = pick == 0   ? CmpOp::Gt
              : pick == 1 ? CmpOp::Lt
              : pick == 2 ? CmpOp::Eq
                          : CmpOp::Ne;
    pred.literal =
        Value(int64_t(kWhereIntLiterals[rng.next_below(kWhereIntLiterals.size())]));
  } else {
    pred.op = rng.next_bool(0.5) ? CmpOp::Eq : CmpOp::Ne;
    size_t n = kTablePool.size() + kColumnPool.size();
    uint64_t pick = rng.next_below(n);
    pred.literal = Value(std::string(
        pick < kTablePool.size() ? kTablePool[pick]
                                 : kColumnPool[pick - kTablePool.size()]));
  }
  return pred;
}

std::string predicate_phrase(const Predicate& pred) {
  return pred.column + " is " + op_phrase(pred.op) + " " +
         literal_text(pred.literal);
}

// Appends 1-2 predicates to both the question and the AST.
void attach_where(QuestionDraft& draft,
                  const std::vector<const ColumnDef*>& candidates, Rng& rng) {
  const ColumnDef& first = *candidates[rng.next_below(candidates.size())];
  Predicate p1 = draw_predicate(first, rng);
  draft.question += " where " + predicate_phrase(p1);
  draft.ast.where.push_back(p1);
  if (rng.next_bool(0.3)) {
    const ColumnDef& second = *candidates[rng.next_below(candidates.size())];
    Predicate p2 = draw_predicate(second, rng);
    draft.question += " and " + predicate_phrase(p2);
    draft.ast.where.push_back(p2);
  }
}

QuestionDraft draw_question(const Schema& schema, Rng& rng) {
  bool can_join = schema.tables.size() == 2 && schema.fk.has_value();
  const TableDef& t0 = schema.tables[0];

  while (true) {
    int tmpl = rng.next_int(0, 6);
    QuestionDraft d;
    switch (tmpl) {
      case 0: {  // show all <c> of <t>
        const ColumnDef& c = t0.columns[rng.next_below(t0.columns.size())];
        d.question = "show all " + c.name + " of " + t0.name;
        d.ast.select = {{std::nullopt, c.name}};
        d.ast.from = t0.name;
        if (rng.next_bool(0.6)) attach_where(d, visible_columns(schema, false), rng);
        return d;
      }
      case 1: {  // show all <c1> and <c2> of <t>
        if (t0.columns.size() < 2) continue;
        uint64_t i = rng.next_below(t0.columns.size());
        uint64_t j = rng.next_below(t0.columns.size() - 1);
        if (j >= i) ++j;
        const ColumnDef& c1 = t0.columns[i];
        const ColumnDef& c2 = t0.columns[j];
        d.question =
            "show all " + c1.name + " and " + c2.name + " of " + t0.name;
        d.ast.select = {{std::nullopt, c1.name}, {std::nullopt, c2.name}};
        d.ast.from = t0.name;
        if (rng.next_bool(0.6)) attach_where(d, visible_columns(schema, false), rng);
        return d;
      }
      case 2: {  // how many rows in <t>
        d.question = "how many rows in " + t0.name;
        d.ast.select = {{AggFn::Count, t0.columns[0].name}};
        d.ast.from = t0.name;
        if (rng.next_bool(0.6)) attach_where(d, visible_columns(schema, false), rng);
        return d;
      }
      case 3: {  // what is the largest|smallest|total <c> in <t>
        std::vector<const ColumnDef*> ints;
        for (const ColumnDef& c : t0.columns)
          if (c.type == ColType::Integer) ints.push_back(&c);
        const ColumnDef& c = *ints[rng.next_below(ints.size())];
        int pick = rng.next_int(0, 2);
        AggFn fn = pick == 0 ? AggFn::Max : pick == 1 ? AggFn::Min : AggFn::Sum;
        const char* word = pick == 0   ? "largest"
                           : pick == 1 ? "smallest"
                                       : "total";
        d.question =
            "what is the " + std::string(word) + " " + c.name + " in " + t0.name;
        d.ast.select = {{fn, c.name}};
        d.ast.from = t0.name;
        if (rng.next_bool(0.6)) attach_where(d, visible_columns(schema, false), rng);
        return d;
      }
      case 4: {  // show all <c> of <t> sorted by <c2> <dir>
        const ColumnDef& c = t0.columns[rng.next_below(t0.columns.size())];
        const ColumnDef& by = t0.columns[rng.next_below(t0.columns.size())];
        bool desc = rng.next_bool(0.5);
        d.question = "show all " + c.name + " of " + t0.name;
        d.ast.select = {{std::nullopt, c.name}};
        d.ast.from = t0.name;
        if (rng.next_bool(0.35)) attach_where(d, visible_columns(schema, false), rng);
        d.question += " sorted by " + by.name +
                      (desc ? " descending" : " ascending");
        d.ast.order_by = OrderBy{by.name, desc};
        return d;
      }
      case 5: {  // show top <k> <c> of <t> sorted by <c2> <dir>
        const ColumnDef& c = t0.columns[rng.next_below(t0.columns.size())];
        const ColumnDef& by = t0.columns[rng.next_below(t0.columns.size())];
        bool desc = rng.next_bool(0.5);
        int k = kLimitLiterals[rng.next_below(kLimitLiterals.size())];
        d.question = "show top " + std::to_string(k) + " " + c.name + " of " +
                     t0.name + " sorted by " + by.name +
                     (desc ? " descending" : " ascending");
        d.ast.select = {{std::nullopt, c.name}};
        d.ast.from = t0.name;
        d.ast.order_by = OrderBy{by.name, desc};
        d.ast.limit = k;
        return d;
      }
      case 6: {  // show all <c> of <t1> with <t2>
        if (!can_join) continue;
        const TableDef& t1 = schema.tables[1];
        bool from_parent = rng.next_bool(0.6);
        const TableDef& src = from_parent ? t0 : t1;
        const ColumnDef& c = src.columns[rng.next_below(src.columns.size())];
        d.question =
            "show all " + c.name + " of " + t0.name + " with " + t1.name;
        d.ast.select = {{std::nullopt, c.name}};
        d.ast.from = t0.name;
        d.ast.join = JoinClause{t1.name, schema.fk->parent_col,
                                schema.fk->child_col};
        if (rng.next_bool(0.75)) {
          // Bias predicates toward the joined table.
          std::vector<const ColumnDef*> cands;
          const TableDef& where_src = rng.next_bool(0.7) ? t1 : t0;
          for (const ColumnDef& col : where_src.columns) cands.push_back(&col);
          attach_where(d, cands, rng);
        }
        return d;
      }
    }
  }
}

}  // namespace

ToyWorld generate_world(uint64_t seed, int n_train, int n_eval) {
  if (n_train < 1 || n_eval < 1)
    throw std::invalid_argument("generate_world requires n_train, n_eval >= 1");

  ToyWorld world;
  world.seed = seed;
  for (int s = 0; s < kNumSchemas; ++s) {
    Schema schema = generate_schema(seed, s);
    // Regenerate on the (unlikely) collision so schemas stay distinct.
    bool dup = false;
    for (const Schema& other : world.schemas) dup = dup || other == schema;
    if (dup) {
      for (uint64_t salt = 1; dup; ++salt) {
        schema = generate_schema(hash_seed(seed, salt), s);
        dup = false;
        for (const Schema& other : world.schemas) dup = dup || other == schema;
      }
    }
    world.schemas.push_back(std::move(schema));
  }

  int total = n_train + n_eval;
  std::unordered_set<std::string> seen;
  std::vector<Example> examples;
  for (uint64_t draw = 0; int(examples.size()) < total; ++draw) {
    Rng rng(hash_seed(seed, kExampleStream, draw));
    int schema_idx = int(rng.next_below(kNumSchemas));
    QuestionDraft d = draw_question(world.schemas[size_t(schema_idx)], rng);
    std::string key = std::to_string(schema_idx) + "|" + d.question;
    if (!seen.insert(key).second) continue;
    Example ex;
    ex.question = std::move(d.question);
    ex.gold_sql = std::move(d.ast);
    ex.gold_sql_text = render_sql(ex.gold_sql);
    ex.schema_index = schema_idx;
    ex.db_seed = hash_seed(seed, kDbStream, examples.size());
    examples.push_back(std::move(ex));
  }

  world.train.assign(examples.begin(), examples.begin() + n_train);
  world.eval.assign(examples.begin() + n_train, examples.end());
  return world;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

nlohmann::json schema_to_json(const Schema& schema) {
  nlohmann::json tables = nlohmann::json::array();
  for (const TableDef& t : schema.tables) {
    nlohmann::json cols = nlohmann::json::array();
    for (const ColumnDef& c : t.columns)
      cols.push_back({{"name", c.name},
                      {"type", c.type == ColType::Integer ? "integer" : "text"}});
    tables.push_back({{"name", t.name}, {"columns", cols}});
  }
  nlohmann::json j{{"tables", tables}};
  if (schema.fk)
    j["fk"] = {{"parent", schema.fk->parent_col}, {"child", schema.fk->child_col}};
  else
    j["fk"] = nullptr;
  return j;
}

Schema schema_from_json(const nlohmann::json& j) {
  Schema schema;
  for (const auto& t : j.at("tables")) {
    TableDef table;
    table.name = t.at("name").get<std::string>();
    for (const auto& c : t.at("columns")) {
      ColumnDef col;
      col.name = c.at("name").get<std::string>();
      col.type = c.at("type").get<std::string>() == "integer"
                     ? ColType::Integer
                     : ColType::Text;
      table.columns.push_back(std::move(col));
    }
    schema.tables.push_back(std::move(table));
  }
  if (!j.at("fk").is_null())
    schema.fk = ForeignKey{j.at("fk").at("parent").get<std::string>(),
                           j.at("fk").at("child").get<std::string>()};
  return schema;
}

nlohmann::json example_to_json(const Example& ex, const char* split) {
  return {{"question", ex.question},
          {"gold_sql_text", ex.gold_sql_text},
          {"schema_index", ex.schema_index},
          {"db_seed", ex.db_seed},
          {"split", split}};
}

Example example_from_json(const nlohmann::json& j) {
  Example ex;
  ex.question = j.at("question").get<std::string>();
  ex.gold_sql_text = j.at("gold_sql_text").get<std::string>();
  auto parsed = parse_sql(ex.gold_sql_text);
  if (std::holds_alternative<ParseError>(parsed))
    throw std::runtime_error("world file contains unparseable gold SQL: " +
                             ex.gold_sql_text);
  ex.gold_sql = std::get<QueryAst>(parsed);
  ex.schema_index = j.at("schema_index").get<int>();
  ex.db_seed = j.at("db_seed").get<uint64_t>();
  return ex;
}

}  // namespace

void save_world(const ToyWorld& world, const std::string& path) {
  nlohmann::json j;
  j["seed"] = world.seed;
  j["schemas"] = nlohmann::json::array();
  for (const Schema& s : world.schemas) j["schemas"].push_back(schema_to_json(s));
  j["examples"] = nlohmann::json::array();
  for (const Example& ex : world.train)
    j["examples"].push_back(example_to_json(ex, "train"));
  for (const Example& ex : world.eval)
    j["examples"].push_back(example_to_json(ex, "eval"));
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << j.dump(2) << '\n';
}

ToyWorld load_world(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  nlohmann::json j;
  f >> j;
  ToyWorld world;
  world.seed = j.at("seed").get<uint64_t>();
  for (const auto& s : j.at("schemas")) world.schemas.push_back(schema_from_json(s));
  for (const auto& e : j.at("examples")) {
    Example ex = example_from_json(e);
    if (e.at("split").get<std::string>() == "train")
      world.train.push_back(std::move(ex));
    else
      world.eval.push_back(std::move(ex));
  }
  return world;
}

}  // namespace kidlab
