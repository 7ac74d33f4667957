#include "mlaqp/executor.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace mlaqp {

std::size_t ColumnarDataset::rows() const {
    if (columns.empty()) return 0;
    const Column& c = columns.front();
    return schema.at(0).kind == AttrKind::numeric ? c.nums.size() : c.strs.size();
}

void ColumnarDataset::validate() const {
    schema.validate();
    if (columns.size() != schema.d()) throw error("column count does not match schema");
    std::size_t n = rows();
    for (std::size_t i = 0; i < columns.size(); ++i) {
        bool numeric = schema.at(i).kind == AttrKind::numeric;
        std::size_t len = numeric ? columns[i].nums.size() : columns[i].strs.size();
        if (len != n) throw error("ragged column '" + schema.at(i).name + "'");
        if (numeric)
            for (double v : columns[i].nums)
                if (!std::isfinite(v))
                    throw error("non-finite value in column '" + schema.at(i).name + "'");
    }
}

namespace {

DatasetSchema schema_from_json(const nlohmann::json& j) {
    DatasetSchema schema;
    schema.name = j.at("name").get<std::string>();
    for (const auto& a : j.at("attributes")) {
        Attribute attr;
        attr.name = a.at("name").get<std::string>();
        std::string kind = a.at("kind").get<std::string>();
        if (kind == "numeric")
            attr.kind = AttrKind::numeric;
        else if (kind == "categorical")
            attr.kind = AttrKind::categorical;
        else
            throw error("unknown attribute kind '" + kind + "'");
        if (a.contains("cardinality")) attr.cardinality = a.at("cardinality").get<std::size_t>();
        schema.attributes.push_back(std::move(attr));
    }
    schema.validate();
    return schema;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

} // namespace

DatasetSchema load_schema_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open schema file " + path);
    nlohmann::json j;
    in >> j;
    return schema_from_json(j);
}

ColumnarDataset load_csv(const std::string& csv_path, const std::string& schema_path) {
    ColumnarDataset ds;
    ds.schema = load_schema_json(schema_path);
    ds.columns.resize(ds.schema.d());

    std::ifstream in(csv_path);
    if (!in) throw io_error("cannot open csv file " + csv_path);
    std::string line;
    if (!std::getline(in, line)) throw io_error("empty csv file " + csv_path);
    auto header = split_csv_line(line);
    if (header.size() != ds.schema.d()) throw error("csv header width does not match schema");
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] != ds.schema.at(i).name)
            throw error("csv header '" + header[i] + "' does not match schema attribute '" +
                        ds.schema.at(i).name + "'");

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != ds.schema.d())
            throw error("csv line " + std::to_string(lineno) + ": wrong cell count");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (ds.schema.at(i).kind == AttrKind::numeric) {
                double v = 0.0;
                const std::string& s = cells[i];
                auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
                if (ec != std::errc{} || p != s.data() + s.size())
                    throw error("csv line " + std::to_string(lineno) + ": bad number '" + s + "'");
                ds.columns[i].nums.push_back(v);
            } else {
                ds.columns[i].strs.push_back(cells[i]);
            }
        }
    }
    ds.validate();
    return ds;
}

void save_csv(const ColumnarDataset& ds, const std::string& csv_path,
              const std::string& schema_path) {
    {
        nlohmann::json j;
        j["name"] = ds.schema.name;
        j["attributes"] = nlohmann::json::array();
        for (const auto& a : ds.schema.attributes) {
            nlohmann::json ja;
            ja["name"] = a.name;
            ja["kind"] = a.kind == AttrKind::numeric ? "numeric" : "categorical";
            if (a.cardinality) ja["cardinality"] = *a.cardinality;
            j["attributes"].push_back(ja);
        }
        std::ofstream out(schema_path);
        if (!out) throw io_error("cannot write " + schema_path);
        out << j.dump(2) << "\n";
    }
    std::ofstream out(csv_path);
    if (!out) throw io_error("cannot write " + csv_path);
    out.precision(17);
    for (std::size_t i = 0; i < ds.schema.d(); ++i)
        out << (i ? "," : "") << ds.schema.at(i).name;
    out << "\n";
    std::size_t n = ds.rows();
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t i = 0; i < ds.schema.d(); ++i) {
            if (i) out << ",";
            if (ds.schema.at(i).kind == AttrKind::numeric)
                out << ds.columns[i].nums[r];
            else
                out << ds.columns[i].strs[r];
        }
        out << "\n";
    }
}

bool like_match(const std::string& value, const std::string& pattern) {
    // iterative wildcard match: % = any run, _ = any single char
    std::size_t v = 0, p = 0, star_p = std::string::npos, star_v = 0;
    while (v < value.size()) {
        if (p < pattern.size() && (pattern[p] == '_' || pattern[p] == value[v])) {
            ++v;
            ++p;
        } else if (p < pattern.size() && pattern[p] == '%') {
            star_p = p++;
            star_v = v;
        } else if (star_p != std::string::npos) {
            p = star_p + 1;
            v = ++star_v;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '%') ++p;
    return p == pattern.size();
}

namespace {

struct RowFilter {
    // numeric interval checks: (column index, lb, ub)
    struct Range {
        std::size_t col;
        double lb, ub;
    };
    std::vector<Range> ranges;
    std::vector<std::pair<std::size_t, std::string>> equalities; // categorical
    std::vector<std::pair<std::size_t, std::string>> likes;

    bool matches(const ColumnarDataset& ds, std::size_t row) const {
        for (const auto& r : ranges) {
            double v = ds.columns[r.col].nums[row];
            if (v < r.lb || v > r.ub) return false;
        }
        for (const auto& [col, val] : equalities)
            if (ds.columns[col].strs[row] != val) return false;
        for (const auto& [col, pat] : likes)
            if (!like_match(ds.columns[col].strs[row], pat)) return false;
        return true;
    }
};

RowFilter build_filter(const ColumnarDataset& ds, const ParsedQuery& q) {
    RowFilter f;
    constexpr double inf = std::numeric_limits<double>::infinity();
    for (const auto& p : q.predicates) {
        auto idx = ds.schema.index_of(p.attribute);
        if (!idx) throw error("predicate on unknown attribute '" + p.attribute + "'");
        if (ds.schema.at(*idx).kind != AttrKind::numeric)
            throw error("range predicate on categorical attribute '" + p.attribute + "'");
        f.ranges.push_back({*idx, p.lb.value_or(-inf), p.ub.value_or(inf)});
    }
    for (const auto& [attr, val] : q.categorical_equalities) {
        auto idx = ds.schema.index_of(attr);
        if (!idx) throw error("equality on unknown attribute '" + attr + "'");
        f.equalities.emplace_back(*idx, val);
    }
    for (const auto& [attr, pat] : q.like_patterns) {
        auto idx = ds.schema.index_of(attr);
        if (!idx) throw error("LIKE on unknown attribute '" + attr + "'");
        f.likes.emplace_back(*idx, pat);
    }
    return f;
}

struct Accumulator {
    double count = 0, sum = 0;
    double mn = std::numeric_limits<double>::infinity();
    double mx = -std::numeric_limits<double>::infinity();

    void add(double v) {
        count += 1;
        sum += v;
        mn = std::min(mn, v);
        mx = std::max(mx, v);
    }
};

} // namespace

AggregateAnswer execute_aggregate(const ColumnarDataset& ds, const ParsedQuery& q) {
    RowFilter filter = build_filter(ds, q);

    // one accumulator per distinct target attribute, plus a bare row counter
    std::map<std::string, Accumulator> per_target;
    std::vector<std::pair<const AggregateSpec*, std::size_t>> targets; // spec -> column
    for (const auto& af : q.aggregates) {
        if (!af.target_attribute) continue;
        auto idx = ds.schema.index_of(*af.target_attribute);
        if (!idx) throw error("aggregate over unknown attribute '" + *af.target_attribute + "'");
        if (ds.schema.at(*idx).kind != AttrKind::numeric)
            throw error("aggregate over categorical attribute '" + *af.target_attribute + "'");
        targets.emplace_back(&af, *idx);
        per_target.try_emplace(*af.target_attribute);
    }

    std::size_t n = ds.rows();
    std::size_t row_count = 0;
    for (std::size_t r = 0; r < n; ++r) {
        if (!filter.matches(ds, r)) continue;
        ++row_count;
        for (auto& [attr, acc] : per_target) {
            std::size_t col = *ds.schema.index_of(attr);
            acc.add(ds.columns[col].nums[r]);
        }
    }

    AggregateAnswer ans;
    ans.empty_selection = row_count == 0;
    for (const auto& af : q.aggregates) {
        if (af.function == AggFn::count) {
            ans.values[af.key()] = static_cast<double>(row_count);
            continue;
        }
        const Accumulator& acc = per_target.at(*af.target_attribute);
        switch (af.function) {
            case AggFn::sum:
                ans.values[af.key()] = acc.sum;
                break;
            case AggFn::avg:
                if (row_count > 0) ans.values[af.key()] = acc.sum / acc.count;
                break;
            case AggFn::min:
                if (row_count > 0) ans.values[af.key()] = acc.mn;
                break;
            case AggFn::max:
                if (row_count > 0) ans.values[af.key()] = acc.mx;
                break;
            case AggFn::count:
                break;
        }
    }
    return ans;
}

namespace {

std::string cell_text(const ColumnarDataset& ds, std::size_t col, std::size_t row) {
    if (ds.schema.at(col).kind == AttrKind::categorical) return ds.columns[col].strs[row];
    std::ostringstream os;
    os.precision(17);
    os << ds.columns[col].nums[row];
    return os.str();
}

} // namespace

std::map<std::vector<std::string>, AggregateAnswer>
execute_group_by(const ColumnarDataset& ds, const ParsedQuery& q) {
    if (q.group_by.empty()) throw error("execute_group_by without GROUP BY attributes");
    std::vector<std::size_t> group_cols;
    for (const auto& g : q.group_by) {
        auto idx = ds.schema.index_of(g);
        if (!idx) throw error("GROUP BY on unknown attribute '" + g + "'");
        group_cols.push_back(*idx);
    }
    RowFilter filter = build_filter(ds, q);

    struct GroupAcc {
        std::size_t rows = 0;
        std::map<std::string, Accumulator> per_target;
    };
    std::map<std::vector<std::string>, GroupAcc> groups;

    std::vector<std::pair<std::string, std::size_t>> targets;
    for (const auto& af : q.aggregates) {
        if (!af.target_attribute) continue;
        auto idx = ds.schema.index_of(*af.target_attribute);
        if (!idx) throw error("aggregate over unknown attribute '" + *af.target_attribute + "'");
        targets.emplace_back(*af.target_attribute, *idx);
    }

    std::size_t n = ds.rows();
    for (std::size_t r = 0; r < n; ++r) {
        if (!filter.matches(ds, r)) continue;
        std::vector<std::string> key;
        key.reserve(group_cols.size());
        for (std::size_t c : group_cols) key.push_back(cell_text(ds, c, r));
        GroupAcc& acc = groups[std::move(key)];
        ++acc.rows;
        for (const auto& [attr, col] : targets) acc.per_target[attr].add(ds.columns[col].nums[r]);
    }

    std::map<std::vector<std::string>, AggregateAnswer> out;
    for (auto& [key, acc] : groups) {
        AggregateAnswer ans;
        ans.empty_selection = acc.rows == 0;
        for (const auto& af : q.aggregates) {
            if (af.function == AggFn::count) {
                ans.values[af.key()] = static_cast<double>(acc.rows);
                continue;
            }
            const Accumulator& a = acc.per_target.at(*af.target_attribute);
            switch (af.function) {
                case AggFn::sum: ans.values[af.key()] = a.sum; break;
                case AggFn::avg: ans.values[af.key()] = a.sum / a.count; break;
                case AggFn::min: ans.values[af.key()] = a.mn; break;
                case AggFn::max: ans.values[af.key()] = a.mx; break;
                case AggFn::count: break;
            }
        }
        out[key] = std::move(ans);
    }
    return out;
}

std::vector<std::vector<std::string>>
select_distinct(const ColumnarDataset& ds, const std::vector<std::string>& attrs) {
    if (attrs.empty()) throw error("select_distinct with no attributes");
    std::vector<std::size_t> cols;
    for (const auto& a : attrs) {
        auto idx = ds.schema.index_of(a);
        if (!idx) throw error("DISTINCT over unknown attribute '" + a + "'");
        cols.push_back(*idx);
    }
    std::set<std::vector<std::string>> seen;
    std::size_t n = ds.rows();
    for (std::size_t r = 0; r < n; ++r) {
        std::vector<std::string> tuple;
        tuple.reserve(cols.size());
        for (std::size_t c : cols) tuple.push_back(cell_text(ds, c, r));
        seen.insert(std::move(tuple));
    }
    return {seen.begin(), seen.end()};
}

} // namespace mlaqp
