// SPDX-License-Identifier: Apache-2.0

#include "msgpipe/coverage/coverage.hpp"

#include <algorithm>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include "msgpipe/errors.hpp"
#include "msgpipe/frontend/checker.hpp"
#include "msgpipe/frontend/printer.hpp"

namespace msgpipe::coverage {

using ast::Node;
using ast::NodeKind;
using ast::Type;

namespace {

struct Candidate {
    ast::NodeId id;
    enum class Op { DeleteStatement, EmptyBlock, Default } op;
    std::optional<Node> replacement;
};

const char* describe(Candidate::Op op)
{
    switch (op) {
    case Candidate::Op::DeleteStatement: return "delete statement";
    case Candidate::Op::EmptyBlock: return "empty block";
    case Candidate::Op::Default: return "default value";
    }
    return "";
}

std::optional<Node> default_value(const Type& t)
{
    const Type& d = t.deref();
    if (t.is_reference())
        return std::nullopt;
    if (d.is_integer())
        return ast::make_node(NodeKind::Literal, "0");
    switch (d.kind) {
    case Type::Kind::Bool: return ast::make_node(NodeKind::Literal, "false");
    case Type::Kind::Address: return ast::make_node(NodeKind::Literal, "@0x0");
    case Type::Kind::Vector: {
        Node v = ast::make_node(NodeKind::VectorLit);
        if (!d.inner.empty() && d.inner.front().kind != Type::Kind::Any)
            v.annotation = d.inner.front();
        return v;
    }
    default: return std::nullopt;
    }
}

bool arithmetic(const Node& n)
{
    static const std::set<std::string> ops{"+", "-", "*", "/", "%", "<<", ">>"};
    return n.is(NodeKind::BinOp) && ops.count(n.text);
}

void collect(const Node& n, const frontend::TypeTable& types, bool statement_position,
             std::vector<Candidate>& out)
{
    if (n.is(NodeKind::Block)) {
        std::size_t stmts = n.has_tail() ? n.children.size() - 1 : n.children.size();
        for (std::size_t i = 0; i < stmts; ++i)
            out.push_back({n.children[i].id, Candidate::Op::DeleteStatement, std::nullopt});
    }
    if (n.is(NodeKind::If)) {
        for (std::size_t i = 1; i < n.children.size(); ++i)
            if (n.children[i].is(NodeKind::Block) && !n.children[i].children.empty())
                out.push_back({n.children[i].id, Candidate::Op::EmptyBlock, std::nullopt});
    }
    if (n.is(NodeKind::While) && !n.loop_body().children.empty())
        out.push_back({n.loop_body().id, Candidate::Op::EmptyBlock, std::nullopt});
    if (!statement_position && (n.is(NodeKind::Call) || arithmetic(n))) {
        auto t = types.find(n.id);
        if (t != types.end())
            if (auto v = default_value(t->second))
                out.push_back({n.id, Candidate::Op::Default, std::move(v)});
    }
    std::size_t limit = n.is(NodeKind::While) ? 2 : n.children.size();
    for (std::size_t i = 0; i < limit; ++i)
        collect(n.children[i], types, n.is(NodeKind::ExprStmt), out);
}

bool apply(Node& n, const Candidate& c)
{
    for (std::size_t i = 0; i < n.children.size(); ++i) {
        Node& child = n.children[i];
        if (child.id == c.id) {
            switch (c.op) {
            case Candidate::Op::DeleteStatement:
                n.children.erase(n.children.begin() + static_cast<std::ptrdiff_t>(i));
                break;
            case Candidate::Op::EmptyBlock: child = ast::make_block({}); break;
            case Candidate::Op::Default: child = *c.replacement; break;
            }
            return true;
        }
        if (apply(child, c))
            return true;
    }
    return false;
}

std::vector<std::string> lines_of(const std::string& text)
{
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line))
        out.push_back(line);
    return out;
}

} // namespace

std::optional<double> CoverageReport::ratio() const
{
    if (total == 0)
        return std::nullopt;
    return static_cast<double>(covered) / total;
}

std::string CoverageReport::describe() const
{
    std::ostringstream out;
    out << "total: " << total << "\ncovered: " << covered << "\nratio: ";
    if (auto r = ratio())
        out << std::fixed << std::setprecision(4) << *r;
    else
        out << "n/a";
    out << "\nuncovered:";
    for (const auto& m : uncovered)
        out << ' ' << m.id;
    out << "\ntimed_out:";
    for (int id : timed_out)
        out << ' ' << id;
    out << '\n';
    return out.str();
}

std::string unified_diff(const std::string& before, const std::string& after, const std::string& label)
{
    auto a = lines_of(before);
    auto b = lines_of(after);
    std::size_t n = a.size(), m = b.size();
    std::vector<std::vector<int>> lcs(n + 1, std::vector<int>(m + 1, 0));
    for (std::size_t i = n; i-- > 0;)
        for (std::size_t j = m; j-- > 0;)
            lcs[i][j] = a[i] == b[j] ? lcs[i + 1][j + 1] + 1 : std::max(lcs[i + 1][j], lcs[i][j + 1]);

    struct Op {
        char tag;
        std::size_t ai, bi;
    };
    std::vector<Op> ops;
    std::size_t i = 0, j = 0;
    while (i < n || j < m) {
        if (i < n && j < m && a[i] == b[j])
            ops.push_back({' ', i++, j++});
        else if (j < m && (i == n || lcs[i][j + 1] > lcs[i + 1][j]))
            ops.push_back({'+', i, j++});
        else
            ops.push_back({'-', i++, j});
    }

    constexpr std::size_t context = 3;
    std::ostringstream out;
    std::size_t k = 0;
    bool header = false;
    while (k < ops.size()) {
        if (ops[k].tag == ' ') {
            ++k;
            continue;
        }
        std::size_t start = k >= context ? k - context : 0;
        std::size_t end = k;
        for (std::size_t q = k; q < ops.size(); ++q) {
            if (ops[q].tag != ' ')
                end = q;
            else if (q - end > 2 * context)
                break;
        }
        end = std::min(ops.size() - 1, end + context);
        while (start < k && ops[start].tag != ' ')
            ++start;
        std::size_t a_len = 0, b_len = 0;
        for (std::size_t q = start; q <= end; ++q) {
            if (ops[q].tag != '+')
                ++a_len;
            if (ops[q].tag != '-')
                ++b_len;
        }
        if (!header) {
            out << "--- a/" << label << "\n+++ b/" << label << "\n";
            header = true;
        }
        out << "@@ -" << (a_len ? ops[start].ai + 1 : ops[start].ai) << ',' << a_len << " +"
            << (b_len ? ops[start].bi + 1 : ops[start].bi) << ',' << b_len << " @@\n";
        for (std::size_t q = start; q <= end; ++q) {
            const std::string& text = ops[q].tag == '+' ? b[ops[q].bi] : a[ops[q].ai];
            out << ops[q].tag << text << '\n';
        }
        k = end + 1;
    }
    return out.str();
}

std::string render_with(const ast::SourceModule& module, const ast::FunctionDef& fn, const ast::SpecBlock* spec)
{
    ast::SourceModule m = module;
    if (auto* f = m.find_function(fn.name))
        *f = fn;
    std::erase_if(m.spec_blocks, [&](const ast::SpecBlock& b) { return b.target_fn == fn.name; });
    if (spec) {
        ast::SpecBlock b = *spec;
        b.target_fn = fn.name;
        m.spec_blocks.push_back(std::move(b));
    }
    return frontend::pretty_print(m);
}

std::vector<Mutant> mutate(const ast::SourceModule& module, std::string_view fn_name, unsigned seed, int n,
                           std::span<const ast::SourceModule> workspace)
{
    if (n < 1)
        throw PreconditionViolated("mutant budget must be at least 1");
    const ast::FunctionDef* fn = module.find_function(fn_name);
    if (!fn)
        throw TargetNotFound(module.qualified_name() + "::" + std::string(fn_name));
    if (!fn->body || fn->body->children.empty())
        throw NoCandidates(std::string(fn_name) + " has no deletable node");

    auto types = frontend::infer_types(module, *fn, workspace);
    std::vector<Candidate> candidates;
    collect(*fn->body, types, false, candidates);
    if (candidates.empty())
        throw NoCandidates(std::string(fn_name) + " has no deletable node");

    std::string original = render_with(module, *fn, nullptr);
    std::string label = module.name + ".move";

    std::vector<Mutant> valid;
    std::set<std::string> seen;
    for (const Candidate& c : candidates) {
        ast::FunctionDef mutated = *fn;
        if (!apply(*mutated.body, c))
            continue;
        ast::SourceModule m = module;
        *m.find_function(fn->name) = mutated;
        if (!frontend::check_function(m, mutated, workspace).empty())
            continue;
        std::string source = render_with(module, mutated, nullptr);
        if (source == original || !seen.insert(source).second)
            continue;
        Mutant mu;
        mu.deleted_nodes = {c.id};
        mu.description = describe(c.op);
        mu.function = std::move(mutated);
        mu.diff = unified_diff(original, source, label);
        mu.source = std::move(source);
        valid.push_back(std::move(mu));
    }

    std::vector<std::size_t> order(valid.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::mt19937 rng(seed);
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng() % i]);
    order.resize(std::min(order.size(), static_cast<std::size_t>(n)));
    std::sort(order.begin(), order.end());

    std::vector<Mutant> out;
    for (std::size_t idx : order) {
        out.push_back(std::move(valid[idx]));
        out.back().id = static_cast<int>(out.size());
    }
    return out;
}

CoverageReport measure(const ast::SourceModule& module, const ast::SpecBlock& spec,
                       const std::vector<Mutant>& mutants, const prover::Prover& prover, int parallelism)
{
    const ast::FunctionDef* fn = module.find_function(spec.target_fn);
    if (!fn)
        throw TargetNotFound(module.qualified_name() + "::" + spec.target_fn);
    return measure_with([&](const ast::FunctionDef& f) { return render_with(module, f, &spec); }, *fn, mutants,
                        prover, parallelism);
}

CoverageReport measure_with(const Renderer& render, const ast::FunctionDef& original,
                            const std::vector<Mutant>& mutants, const prover::Prover& prover, int parallelism)
{
    auto baseline = prover.verify(render(original));
    if (!baseline.passed())
        throw PreconditionViolated("spec does not verify on the original function: " +
                                   std::string(prover::to_string(baseline.kind)));

    std::vector<std::string> sources;
    for (const Mutant& m : mutants)
        sources.push_back(render(m.function));
    auto verdicts = prover::verify_all(prover, sources, parallelism);

    CoverageReport r;
    for (std::size_t i = 0; i < mutants.size(); ++i) {
        switch (verdicts[i].kind) {
        case prover::VerdictKind::Timeout: r.timed_out.push_back(mutants[i].id); continue;
        case prover::VerdictKind::Pass: r.uncovered.push_back(mutants[i]); break;
        default: ++r.covered; break;
        }
        ++r.total;
    }
    std::sort(r.uncovered.begin(), r.uncovered.end(), [](const Mutant& a, const Mutant& b) { return a.id < b.id; });
    return r;
}

std::string feedback_diffs(const CoverageReport& report)
{
    std::string out;
    for (const Mutant& m : report.uncovered)
        out += m.diff;
    return out;
}

} // namespace msgpipe::coverage
