#include "warden/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace warden {

namespace {

// RFC-4180 field splitting with quoted fields and escaped quotes.
std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

std::string csv_escape(const std::string& s) {
    bool needs = s.find_first_of(",\"\n\r") != std::string::npos;
    if (!needs) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

GroundTerm parse_cell(const std::string& cell, const std::string& type, size_t row,
                      size_t col) {
    if (cell.rfind("_:n", 0) == 0) {
        int64_t id = 0;
        auto [p, ec] = std::from_chars(cell.data() + 3, cell.data() + cell.size(), id);
        if (ec == std::errc() && p == cell.data() + cell.size())
            return LabeledNull{id};
    }
    if (type == "string" || type.empty()) return Value{cell};
    if (type == "int") {
        int64_t v = 0;
        auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc() || p != cell.data() + cell.size())
            throw CsvTypeError(row, col, "int", cell);
        return Value{v};
    }
    if (type == "float") {
        try {
            size_t pos = 0;
            double v = std::stod(cell, &pos);
            if (pos != cell.size()) throw std::invalid_argument(cell);
            return Value{v};
        } catch (const std::exception&) {
            throw CsvTypeError(row, col, "float", cell);
        }
    }
    if (type == "bool") {
        if (cell == "true") return Value{true};
        if (cell == "false") return Value{false};
        throw CsvTypeError(row, col, "bool", cell);
    }
    if (type == "date") {
        int y = 0, m = 0, d = 0;
        if (std::sscanf(cell.c_str(), "%d-%d-%d", &y, &m, &d) != 3)
            throw CsvTypeError(row, col, "date", cell);
        return Value{Date{y, m, d}};
    }
    throw IoError("unknown column type '" + type + "'");
}

}  // namespace

void load_csv(const CsvBinding& binding, const std::function<void(Fact)>& yield) {
    std::ifstream in(binding.path, std::ios::binary);
    if (!in) throw IoError("cannot open " + binding.path);
    std::string line;
    size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells = split_row(line);
        Fact f;
        f.pred = binding.pred;
        f.args.reserve(cells.size());
        for (size_t i = 0; i < cells.size(); ++i) {
            std::string type =
                i < binding.column_types.size() ? binding.column_types[i] : "string";
            f.args.push_back(parse_cell(cells[i], type, row, i + 1));
        }
        yield(std::move(f));
    }
}

std::vector<Fact> load(const CsvBinding& binding) {
    std::vector<Fact> out;
    load_csv(binding, [&](Fact f) { out.push_back(std::move(f)); });
    return out;
}

std::set<Value> active_domain(const Database& database) {
    std::set<Value> out;
    for (const auto& [pred, facts] : database)
        for (const auto& f : facts)
            for (const auto& t : f.args)
                if (const auto* v = std::get_if<Value>(&t)) out.insert(*v);
    return out;
}

std::string render_csv(std::vector<Fact> facts, const OutputDirectives& d) {
    if (d.certain) {
        facts.erase(std::remove_if(facts.begin(), facts.end(),
                                   [](const Fact& f) {
                                       for (const auto& t : f.args)
                                           if (std::holds_alternative<LabeledNull>(t))
                                               return true;
                                       return false;
                                   }),
                    facts.end());
    }
    if (d.sorted) std::sort(facts.begin(), facts.end());
    std::string out;
    for (const auto& f : facts) {
        for (size_t i = 0; i < f.args.size(); ++i) {
            if (i) out += ",";
            if (const auto* v = std::get_if<Value>(&f.args[i]);
                v && std::holds_alternative<std::string>(*v))
                out += csv_escape(std::get<std::string>(*v));
            else
                out += to_string(f.args[i]);
        }
        out += "\n";
    }
    return out;
}

void write_output(const std::string& path, std::vector<Fact> facts,
                  const OutputDirectives& d) {
    write_file(path, render_csv(std::move(facts), d));
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << content;
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace warden
