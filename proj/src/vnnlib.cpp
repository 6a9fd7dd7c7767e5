#include "malcert/vnnlib.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

namespace malcert {

namespace {

std::string fmt_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_eps(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

[[noreturn]] void fail(int line, const std::string& msg) {
    throw std::runtime_error("vnnlib:" + std::to_string(line) + ": " + msg);
}

struct Token {
    enum Type { LParen, RParen, Atom } type;
    std::string text;
    int line;
};

std::vector<Token> tokenize(const std::string& text) {
    std::vector<Token> out;
    int line = 1;
    std::size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (c == '\n') {
            ++line;
            ++i;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
        } else if (c == ';') {
            while (i < text.size() && text[i] != '\n') ++i;
        } else if (c == '(') {
            out.push_back({Token::LParen, "(", line});
            ++i;
        } else if (c == ')') {
            out.push_back({Token::RParen, ")", line});
            ++i;
        } else {
            std::size_t j = i;
            while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j])) &&
                   text[j] != '(' && text[j] != ')' && text[j] != ';')
                ++j;
            out.push_back({Token::Atom, text.substr(i, j - i), line});
            i = j;
        }
    }
    return out;
}

struct Node {
    bool is_list = false;
    std::string atom;
    std::vector<Node> kids;
    int line = 0;
};

Node parse_node(const std::vector<Token>& toks, std::size_t& pos) {
    const Token& t = toks[pos];
    if (t.type == Token::RParen) fail(t.line, "unexpected ')'");
    if (t.type == Token::Atom) {
        ++pos;
        Node n;
        n.atom = t.text;
        n.line = t.line;
        return n;
    }
    Node n;
    n.is_list = true;
    n.line = t.line;
    ++pos;
    while (pos < toks.size() && toks[pos].type != Token::RParen)
        n.kids.push_back(parse_node(toks, pos));
    if (pos >= toks.size()) fail(t.line, "missing ')'");
    ++pos;
    return n;
}

bool parse_var(const std::string& s, char prefix, std::size_t& idx) {
    if (s.size() < 3 || s[0] != prefix || s[1] != '_') return false;
    for (std::size_t i = 2; i < s.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    idx = std::stoul(s.substr(2));
    return true;
}

bool parse_number(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

OutputAtom parse_atom(const Node& e, std::size_t num_y) {
    if (!e.is_list || e.kids.size() != 3 || e.kids[0].is_list)
        fail(e.line, "expected (>=|<= Y_i <rhs>)");
    OutputAtom atom;
    const std::string& op = e.kids[0].atom;
    if (op == ">=")
        atom.geq = true;
    else if (op == "<=")
        atom.geq = false;
    else
        fail(e.kids[0].line, "unsupported operator '" + op + "'");
    if (e.kids[1].is_list || !parse_var(e.kids[1].atom, 'Y', atom.lhs))
        fail(e.kids[1].line, "property atoms must compare an output variable");
    if (atom.lhs >= num_y) fail(e.kids[1].line, "undeclared variable Y_" + std::to_string(atom.lhs));
    if (e.kids[2].is_list) fail(e.kids[2].line, "bad property operand");
    std::size_t rhs_idx = 0;
    double rhs_val = 0.0;
    if (parse_var(e.kids[2].atom, 'Y', rhs_idx)) {
        if (rhs_idx >= num_y)
            fail(e.kids[2].line, "undeclared variable Y_" + std::to_string(rhs_idx));
        atom.rhs_is_const = false;
        atom.rhs_index = rhs_idx;
    } else if (parse_number(e.kids[2].atom, rhs_val)) {
        atom.rhs_is_const = true;
        atom.rhs_value = rhs_val;
    } else {
        fail(e.kids[2].line, "bad property operand '" + e.kids[2].atom + "'");
    }
    return atom;
}

std::string atom_text(const OutputAtom& a) {
    std::string s = "(";
    s += a.geq ? ">=" : "<=";
    s += " Y_" + std::to_string(a.lhs) + " ";
    s += a.rhs_is_const ? fmt_num(a.rhs_value) : "Y_" + std::to_string(a.rhs_index);
    s += ")";
    return s;
}

}  // namespace

std::string emit(const VnnLibSpec& spec) {
    if (spec.input_bounds.size() != spec.num_inputs)
        throw std::invalid_argument("vnnlib: bound list does not match num_inputs");
    if (spec.num_inputs == 0 || spec.num_outputs == 0)
        throw std::invalid_argument("vnnlib: empty variable set");
    if (spec.property.empty()) throw std::invalid_argument("vnnlib: empty property");
    for (const auto& b : spec.input_bounds)
        if (b.first > b.second) throw std::invalid_argument("vnnlib: crossed input bounds");
    for (const OutputAtom& a : spec.property) {
        if (a.lhs >= spec.num_outputs || (!a.rhs_is_const && a.rhs_index >= spec.num_outputs))
            throw std::invalid_argument("vnnlib: property references undeclared output");
    }

    std::string out;
    for (std::size_t i = 0; i < spec.num_inputs; ++i)
        out += "(declare-const X_" + std::to_string(i) + " Real)\n";
    for (std::size_t j = 0; j < spec.num_outputs; ++j)
        out += "(declare-const Y_" + std::to_string(j) + " Real)\n";
    out += "\n";
    for (std::size_t i = 0; i < spec.num_inputs; ++i) {
        out += "(assert (>= X_" + std::to_string(i) + " " + fmt_num(spec.input_bounds[i].first) +
               "))\n";
        out += "(assert (<= X_" + std::to_string(i) + " " + fmt_num(spec.input_bounds[i].second) +
               "))\n";
    }
    out += "\n";
    if (spec.property.size() == 1) {
        out += "(assert " + atom_text(spec.property[0]) + ")\n";
    } else {
        out += "(assert (or";
        for (const OutputAtom& a : spec.property) out += " " + atom_text(a);
        out += "))\n";
    }
    return out;
}

std::string emit(const InputSpec& spec, std::size_t target, std::size_t num_outputs) {
    if (target >= num_outputs) throw std::invalid_argument("vnnlib: target class out of range");
    if (spec.lower.size() != spec.upper.size() || spec.lower.empty())
        throw std::invalid_argument("vnnlib: malformed input spec");
    VnnLibSpec v;
    v.num_inputs = spec.lower.size();
    v.num_outputs = num_outputs;
    for (std::size_t i = 0; i < spec.lower.size(); ++i)
        v.input_bounds.emplace_back(spec.lower[i], spec.upper[i]);
    for (std::size_t j = 0; j < num_outputs; ++j) {
        if (j == target) continue;
        OutputAtom a;
        a.lhs = j;
        a.geq = true;
        a.rhs_is_const = false;
        a.rhs_index = target;
        v.property.push_back(a);
    }
    return emit(v);
}

VnnLibSpec parse(const std::string& text) {
    std::vector<Token> toks = tokenize(text);
    if (toks.empty()) fail(1, "empty specification");
    std::vector<Node> forms;
    std::size_t pos = 0;
    while (pos < toks.size()) forms.push_back(parse_node(toks, pos));

    VnnLibSpec spec;
    std::vector<int> decl_line_x;
    std::vector<bool> has_lo, has_hi;
    std::vector<double> lo, hi;
    bool have_property = false;

    for (const Node& form : forms) {
        if (!form.is_list || form.kids.empty() || form.kids[0].is_list)
            fail(form.line, "expected (declare-const ...) or (assert ...)");
        const std::string& head = form.kids[0].atom;
        if (head == "declare-const") {
            if (form.kids.size() != 3 || form.kids[1].is_list || form.kids[2].is_list)
                fail(form.line, "expected (declare-const <name> Real)");
            if (form.kids[2].atom != "Real")
                fail(form.kids[2].line, "only Real variables are supported");
            std::size_t idx = 0;
            if (parse_var(form.kids[1].atom, 'X', idx)) {
                if (idx != spec.num_inputs)
                    fail(form.kids[1].line, "expected X_" + std::to_string(spec.num_inputs) +
                                                ", got " + form.kids[1].atom);
                ++spec.num_inputs;
                decl_line_x.push_back(form.line);
                has_lo.push_back(false);
                has_hi.push_back(false);
                lo.push_back(0.0);
                hi.push_back(0.0);
            } else if (parse_var(form.kids[1].atom, 'Y', idx)) {
                if (idx != spec.num_outputs)
                    fail(form.kids[1].line, "expected Y_" + std::to_string(spec.num_outputs) +
                                                ", got " + form.kids[1].atom);
                ++spec.num_outputs;
            } else {
                fail(form.kids[1].line, "variable names must be X_<i> or Y_<i>");
            }
        } else if (head == "assert") {
            if (form.kids.size() != 2 || !form.kids[1].is_list)
                fail(form.line, "expected (assert (<expr>))");
            const Node& e = form.kids[1];
            if (e.kids.empty() || e.kids[0].is_list) fail(e.line, "malformed expression");
            const std::string& op = e.kids[0].atom;
            if (op == "or") {
                if (have_property) fail(e.line, "multiple property asserts");
                if (e.kids.size() < 2) fail(e.line, "empty disjunction");
                for (std::size_t k = 1; k < e.kids.size(); ++k)
                    spec.property.push_back(parse_atom(e.kids[k], spec.num_outputs));
                have_property = true;
            } else if (op == ">=" || op == "<=") {
                if (e.kids.size() != 3 || e.kids[1].is_list)
                    fail(e.line, "expected (" + op + " <var> <value>)");
                std::size_t idx = 0;
                if (parse_var(e.kids[1].atom, 'X', idx)) {
                    if (idx >= spec.num_inputs)
                        fail(e.kids[1].line, "undeclared variable X_" + std::to_string(idx));
                    double v = 0.0;
                    if (e.kids[2].is_list || !parse_number(e.kids[2].atom, v))
                        fail(e.kids[2].line, "input bounds must be numeric");
                    if (op == ">=") {
                        if (has_lo[idx])
                            fail(e.line, "conflicting lower bounds for X_" + std::to_string(idx));
                        has_lo[idx] = true;
                        lo[idx] = v;
                    } else {
                        if (has_hi[idx])
                            fail(e.line, "conflicting upper bounds for X_" + std::to_string(idx));
                        has_hi[idx] = true;
                        hi[idx] = v;
                    }
                } else if (parse_var(e.kids[1].atom, 'Y', idx)) {
                    if (have_property) fail(e.line, "multiple property asserts");
                    spec.property.push_back(parse_atom(e, spec.num_outputs));
                    have_property = true;
                } else {
                    fail(e.kids[1].line, "unknown variable '" + e.kids[1].atom + "'");
                }
            } else {
                fail(e.kids[0].line, "unsupported form '" + op + "'");
            }
        } else {
            fail(form.line, "unsupported top-level form '" + head + "'");
        }
    }

    if (spec.num_inputs == 0) fail(1, "no input variables declared");
    if (spec.num_outputs == 0) fail(1, "no output variables declared");
    for (std::size_t i = 0; i < spec.num_inputs; ++i) {
        if (!has_lo[i]) fail(decl_line_x[i], "missing lower bound for X_" + std::to_string(i));
        if (!has_hi[i]) fail(decl_line_x[i], "missing upper bound for X_" + std::to_string(i));
        if (lo[i] > hi[i])
            fail(decl_line_x[i], "conflicting bounds for X_" + std::to_string(i));
        spec.input_bounds.emplace_back(lo[i], hi[i]);
    }
    if (!have_property) fail(toks.back().line, "missing property assert");
    return spec;
}

std::optional<std::size_t> robustness_target(const VnnLibSpec& spec) {
    if (spec.property.empty()) return std::nullopt;
    std::size_t t = spec.property[0].rhs_index;
    std::set<std::size_t> lhs;
    for (const OutputAtom& a : spec.property) {
        if (!a.geq || a.rhs_is_const || a.rhs_index != t || a.lhs == t) return std::nullopt;
        lhs.insert(a.lhs);
    }
    if (t >= spec.num_outputs || lhs.size() != spec.num_outputs - 1) return std::nullopt;
    return t;
}

std::vector<ManifestRow> batch_emit(const std::vector<BatchSample>& samples,
                                    std::vector<double> eps_list,
                                    std::vector<std::string> masks,
                                    const FeatureSchema* schema, const std::string& out_dir,
                                    const std::string& dataset_name, std::size_t num_outputs) {
    if (samples.empty()) throw std::invalid_argument("batch_emit: no samples");
    if (eps_list.empty()) throw std::invalid_argument("batch_emit: no epsilons");
    std::sort(eps_list.begin(), eps_list.end());
    eps_list.erase(std::unique(eps_list.begin(), eps_list.end()), eps_list.end());
    if (schema == nullptr) {
        masks = {"all"};
        for (double e : eps_list)
            if (e < 0.0 || e != std::floor(e))
                throw std::invalid_argument("batch_emit: pixel epsilons must be whole 1/255 steps");
    } else {
        if (masks.empty()) throw std::invalid_argument("batch_emit: no masks");
        std::sort(masks.begin(), masks.end());
        masks.erase(std::unique(masks.begin(), masks.end()), masks.end());
    }

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw std::runtime_error("batch_emit: cannot create " + out_dir + ": " + ec.message());

    std::vector<ManifestRow> manifest;
    std::set<std::string> names;
    for (std::size_t si = 0; si < samples.size(); ++si) {
        for (const std::string& mask_name : masks) {
            for (double eps : eps_list) {
                InputSpec spec;
                if (schema) {
                    FeatureMask mask;
                    mask.preset = mask_preset_from_string(mask_name);
                    spec = build_feature_spec(samples[si].x, samples[si].y, eps, *schema, mask);
                } else {
                    spec = build_pixel_spec(samples[si].x, samples[si].y, static_cast<int>(eps));
                }
                std::string file = dataset_name + "_" + std::to_string(si) + "_" + mask_name +
                                   "_" + fmt_eps(eps) + ".vnnlib";
                if (!names.insert(file).second)
                    throw std::runtime_error("batch_emit: filename collision on " + file);
                std::filesystem::path path = std::filesystem::path(out_dir) / file;
                std::ofstream os(path, std::ios::binary);
                if (!os) throw std::runtime_error("batch_emit: cannot write " + path.string());
                os << emit(spec, spec.target, num_outputs);
                if (!os.good())
                    throw std::runtime_error("batch_emit: write failed for " + path.string());
                manifest.push_back({file, si, mask_name, eps, samples[si].y});
            }
        }
    }
    return manifest;
}

std::string manifest_csv(const std::vector<ManifestRow>& rows) {
    std::string out = "file,sample,mask,epsilon,target\n";
    for (const ManifestRow& r : rows) {
        out += r.file + "," + std::to_string(r.sample) + "," + r.mask + "," + fmt_num(r.epsilon) +
               "," + std::to_string(r.target) + "\n";
    }
    return out;
}

}  // namespace malcert
