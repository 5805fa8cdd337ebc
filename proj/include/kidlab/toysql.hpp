#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace kidlab {

// ---------------------------------------------------------------------------
// Schema and data
// ---------------------------------------------------------------------------

enum class ColType { Integer, Text };

struct ColumnDef {
  std::string name;
  ColType type;
  bool operator==(const ColumnDef&) const = default;
};

struct TableDef {
  std::string name;
  std::vector<ColumnDef> columns;
  bool operator==(const TableDef&) const = default;
};

// child_col lives in tables[1] and references parent_col in tables[0].
struct ForeignKey {
  std::string parent_col;
  std::string child_col;
  bool operator==(const ForeignKey&) const = default;
};

struct Schema {
  std::vector<TableDef> tables;
  std::optional<ForeignKey> fk;
  bool operator==(const Schema&) const = default;
};

using Value = std::variant<int64_t, std::string>;
using Row = std::vector<Value>;

// Integers order before text; within a type the natural order applies.
int value_compare(const Value& a, const Value& b);

struct Database {
  Schema schema;
  std::vector<std::vector<Row>> rows;  // parallel to schema.tables
  uint64_t seed = 0;
};

// Deterministic per (schema, seed): 3..20 rows per table, integer cells in
// [0, 99], text cells from the identifier pool. Child FK columns mostly take
// values present in the parent column so joins match.
Database build_database(const Schema& schema, uint64_t db_seed);

// ---------------------------------------------------------------------------
// Queries
// ---------------------------------------------------------------------------

enum class AggFn { Count, Max, Min, Sum };

struct SelectItem {
  std::optional<AggFn> agg;  // nullopt = bare column
  std::string column;
  bool operator==(const SelectItem&) const = default;
};

enum class CmpOp { Eq, Lt, Gt, Ne };

struct Predicate {
  std::string column;
  CmpOp op;
  Value literal;
  bool operator==(const Predicate&) const = default;
};

struct OrderBy {
  std::string column;
  bool descending = false;
  bool operator==(const OrderBy&) const = default;
};

struct JoinClause {
  std::string table;
  std::string left_col;   // column of the FROM table
  std::string right_col;  // column of the joined table
  bool operator==(const JoinClause&) const = default;
};

struct QueryAst {
  std::vector<SelectItem> select;
  std::string from;
  std::optional<JoinClause> join;
  std::vector<Predicate> where;  // conjunction, at most 2 in generated queries
  std::optional<OrderBy> order_by;
  std::optional<int64_t> limit;
  bool operator==(const QueryAst&) const = default;
};

// Canonical single-line rendering, uppercase keywords, idempotent formatting.
std::string render_sql(const QueryAst& ast);

struct ParseError {
  int token_index = 0;
  std::string message;
};

// Accepts exactly the closed grammar; anything else yields a ParseError with
// the first offending token index.
std::variant<QueryAst, ParseError> parse_sql(const std::string& text);

struct ExecError {
  std::string unknown_name;
};

struct ResultSet {
  std::vector<std::string> columns;
  std::vector<Row> rows;
  bool ordered = false;  // true iff the query had ORDER BY
};

// Relational semantics: filter, optional inner join, aggregate over the full
// filtered set, order, limit. Total over all parseable ASTs except unknown
// table/column names. Cross-type comparisons use value_compare; SUM counts
// only integer cells; MAX/MIN over an empty input yield an empty result.
std::variant<ResultSet, ExecError> execute(const QueryAst& ast,
                                           const Database& db);

// Multiset comparison unless the gold query was ordered, then row order is
// significant. Column names are not compared (standard execution-accuracy
// practice); arity is.
bool result_sets_equal(const ResultSet& predicted, const ResultSet& gold);

// ---------------------------------------------------------------------------
// World
// ---------------------------------------------------------------------------

struct Example {
  std::string question;
  QueryAst gold_sql;
  std::string gold_sql_text;
  int schema_index = 0;
  uint64_t db_seed = 0;
};

struct ToyWorld {
  uint64_t seed = 0;
  std::vector<Schema> schemas;
  std::vector<Example> train;
  std::vector<Example> eval;
};

// Serialized schema followed by "ask" and the question; the model input.
std::string serialize_prompt(const Schema& schema, const std::string& question);

// Pure function of its arguments; n_train, n_eval >= 1. Produces >= 8
// distinct schemas shared across splits with globally unique questions.
ToyWorld generate_world(uint64_t seed, int n_train, int n_eval);

void save_world(const ToyWorld& world, const std::string& path);
ToyWorld load_world(const std::string& path);

}  // namespace kidlab
