#include "oracle_sql.hpp"

#include <algorithm>

#include "kidlab/grammar_pool.hpp"

namespace kidlab::testing {

namespace {

// Independent total order over values: ints first, then strings.
int cmp_value(const Value& a, const Value& b) {
  bool a_int = std::holds_alternative<int64_t>(a);
  bool b_int = std::holds_alternative<int64_t>(b);
  if (a_int && !b_int) return -1;
  if (!a_int && b_int) return 1;
  if (a_int) {
    int64_t x = std::get<int64_t>(a), y = std::get<int64_t>(b);
    if (x < y) return -1;
    if (x > y) return 1;
    return 0;
  }
  const auto& x = std::get<std::string>(a);
  const auto& y = std::get<std::string>(b);
  if (x < y) return -1;
  if (x > y) return 1;
  return 0;
}

struct NamedRow {
  std::vector<std::string> names;
  std::vector<Value> values;

  std::optional<Value> lookup(const std::string& name) const {
    for (size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return values[i];
    return std::nullopt;
  }
};

bool eval_pred(const Predicate& pred, const NamedRow& row, bool& bad_name) {
  auto cell = row.lookup(pred.column);
  if (!cell) {
    bad_name = true;
    return false;
  }
  int c = cmp_value(*cell, pred.literal);
  if (pred.op == CmpOp::Eq) return c == 0;
  if (pred.op == CmpOp::Ne) return c != 0;
  if (pred.op == CmpOp::Lt) return c < 0;
  return c > 0;
}

}  // namespace

std::optional<ResultSet> oracle_execute(const QueryAst& query,
                                        const Database& db) {
  const Schema& schema = db.schema;

  int from = -1, joined = -1;
  for (size_t t = 0; t < schema.tables.size(); ++t) {
    if (schema.tables[t].name == query.from) from = int(t);
    if (query.join && schema.tables[t].name == query.join->table)
      joined = int(t);
  }
  if (from < 0) return std::nullopt;
  if (query.join && joined < 0) return std::nullopt;

  auto names_of = [&](int t) {
    std::vector<std::string> names;
    for (const ColumnDef& c : schema.tables[size_t(t)].columns)
      names.push_back(c.name);
    return names;
  };

  std::vector<NamedRow> working;
  if (query.join) {
    std::vector<std::string> names = names_of(from);
    std::vector<std::string> jnames = names_of(joined);
    bool left_ok = false, right_ok = false;
    for (const std::string& n : names) left_ok |= n == query.join->left_col;
    for (const std::string& n : jnames) right_ok |= n == query.join->right_col;
    if (!left_ok || !right_ok) return std::nullopt;
    std::vector<std::string> all = names;
    all.insert(all.end(), jnames.begin(), jnames.end());
    for (const Row& a : db.rows[size_t(from)]) {
      NamedRow left{names, a};
      Value lv = *left.lookup(query.join->left_col);
      for (const Row& b : db.rows[size_t(joined)]) {
        NamedRow right{jnames, b};
        Value rv = *right.lookup(query.join->right_col);
        if (cmp_value(lv, rv) != 0) continue;
        NamedRow merged{all, a};
        merged.values.insert(merged.values.end(), b.begin(), b.end());
        working.push_back(std::move(merged));
      }
    }
  } else {
    std::vector<std::string> names = names_of(from);
    for (const Row& a : db.rows[size_t(from)]) working.push_back({names, a});
  }

  // Validate references even when no rows survive.
  {
    NamedRow probe;
    probe.names = names_of(from);
    if (query.join) {
      auto jnames = names_of(joined);
      probe.names.insert(probe.names.end(), jnames.begin(), jnames.end());
    }
    for (const SelectItem& item : query.select)
      if (std::find(probe.names.begin(), probe.names.end(), item.column) ==
          probe.names.end())
        return std::nullopt;
    for (const Predicate& pred : query.where)
      if (std::find(probe.names.begin(), probe.names.end(), pred.column) ==
          probe.names.end())
        return std::nullopt;
    if (query.order_by &&
        std::find(probe.names.begin(), probe.names.end(),
                  query.order_by->column) == probe.names.end())
      return std::nullopt;
  }

  std::vector<NamedRow> filtered;
  for (const NamedRow& row : working) {
    bool bad = false;
    bool keep = true;
    for (const Predicate& pred : query.where)
      keep = keep && eval_pred(pred, row, bad);
    if (bad) return std::nullopt;
    if (keep) filtered.push_back(row);
  }

  if (query.order_by) {
    bool desc = query.order_by->descending;
    std::stable_sort(filtered.begin(), filtered.end(),
                     [&](const NamedRow& a, const NamedRow& b) {
                       int c = cmp_value(*a.lookup(query.order_by->column),
                                         *b.lookup(query.order_by->column));
                       return desc ? c > 0 : c < 0;
                     });
  }

  ResultSet rs;
  rs.ordered = query.order_by.has_value();
  bool agg = !query.select.empty() && query.select.front().agg.has_value();
  if (agg) {
    for (const SelectItem& item : query.select) rs.columns.push_back(item.column);
    Row out;
    bool no_extreme = false;  // MAX/MIN over empty input: no row at all
    for (const SelectItem& item : query.select) {
      std::vector<Value> cells;
      for (const NamedRow& row : filtered) cells.push_back(*row.lookup(item.column));
      switch (*item.agg) {
        case AggFn::Count:
          out.emplace_back(int64_t(cells.size()));
          break;
        case AggFn::Sum: {
          int64_t sum = 0;
          for (const Value& v : cells)
            if (std::holds_alternative<int64_t>(v)) sum += std::get<int64_t>(v);
          out.emplace_back(sum);
          break;
        }
        case AggFn::Max:
        case AggFn::Min: {
          if (cells.empty()) {
            no_extreme = true;
            break;
          }
          Value best = cells.front();
          for (const Value& v : cells) {
            int c = cmp_value(v, best);
            if (*item.agg == AggFn::Max ? c > 0 : c < 0) best = v;
          }
          out.push_back(best);
          break;
        }
      }
    }
    if (!no_extreme) rs.rows.push_back(std::move(out));
  } else {
    for (const SelectItem& item : query.select) rs.columns.push_back(item.column);
    for (const NamedRow& row : filtered) {
      Row out;
      for (const SelectItem& item : query.select)
        out.push_back(*row.lookup(item.column));
      rs.rows.push_back(std::move(out));
    }
  }

  if (query.limit && int64_t(rs.rows.size()) > *query.limit)
    rs.rows.resize(size_t(*query.limit));
  return rs;
}

QueryAst random_query(const Schema& schema, Rng& rng) {
  QueryAst q;
  const TableDef& t0 = schema.tables[0];
  bool join = schema.tables.size() == 2 && schema.fk && rng.next_bool(0.5);

  std::vector<std::string> visible;
  for (const ColumnDef& c : t0.columns) visible.push_back(c.name);
  q.from = t0.name;
  if (join) {
    q.join = JoinClause{schema.tables[1].name, schema.fk->parent_col,
                        schema.fk->child_col};
    for (const ColumnDef& c : schema.tables[1].columns)
      visible.push_back(c.name);
  }

  auto pick_col = [&] { return visible[rng.next_below(visible.size())]; };

  if (rng.next_bool(0.35)) {
    int n = rng.next_int(1, 2);
    for (int i = 0; i < n; ++i) {
      AggFn fn = AggFn(rng.next_int(0, 3));
      q.select.push_back({fn, pick_col()});
    }
  } else {
    int n = rng.next_int(1, 3);
    for (int i = 0; i < n; ++i) q.select.push_back({std::nullopt, pick_col()});
  }

  int n_preds = rng.next_int(0, 2);
  for (int i = 0; i < n_preds; ++i) {
    Predicate pred;
    pred.column = pick_col();
    pred.op = CmpOp(rng.next_int(0, 3));
    if (rng.next_bool(0.7)) {
      pred.literal = Value(int64_t(rng.next_int(0, 99)));
    } else {
      size_t pool = kTablePool.size() + kColumnPool.size();
      uint64_t pick = rng.next_below(pool);
      pred.literal = Value(std::string(
          pick < kTablePool.size() ? kTablePool[pick]
                                   : kColumnPool[pick - kTablePool.size()]));
    }
    q.where.push_back(std::move(pred));
  }

  if (rng.next_bool(0.4)) q.order_by = OrderBy{pick_col(), rng.next_bool(0.5)};
  if (rng.next_bool(0.3)) q.limit = rng.next_int(1, 12);
  return q;
}

}  // namespace kidlab::testing
