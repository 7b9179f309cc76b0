// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msgpipe/frontend/ast.hpp"

namespace msgpipe::deps {

/// Fully qualified function path, `address::module::function`.
using FunctionPath = std::string;

struct Callee {
    FunctionPath path;
    ast::FunctionDef def; // body absent for natives
    bool native = false;
};

struct StructEntry {
    std::string path; // address::module::Struct
    ast::StructDef def;
};

struct ConstEntry {
    std::string path;
    ast::ConstDef def;
};

struct DependencyClosure {
    FunctionPath target;
    ast::FunctionDef target_fn;
    std::string target_module; // address::module
    std::vector<Callee> callees; // callees before callers
    std::vector<StructEntry> structs;
    std::vector<ConstEntry> constants;
    std::map<FunctionPath, std::vector<FunctionPath>> call_graph;
    std::vector<FunctionPath> externals; // call targets outside the workspace
    bool cyclic = false;
    std::vector<FunctionPath> cycle_members;
    /// Copy of the workspace the closure was sliced from.
    std::vector<ast::SourceModule> workspace;

    const ast::SourceModule& module() const;
    const Callee* find_callee(std::string_view path) const;
};

enum class ContextMode { Inlined, Listed };

const char* to_string(ContextMode m); // "V1" / "V2"

struct ContextMetadata {
    bool has_loops = false;
    bool has_global_mut = false;
    int callee_count = 0;
};

struct GenerationContext {
    ContextMode mode = ContextMode::Listed;
    FunctionPath target;
    std::string target_name;
    std::string header;
    std::string target_source;
    std::vector<std::string> dependency_sources;
    ContextMetadata metadata;

    /// Header, target and dependencies as one prompt-ready text.
    std::string render() const;
};

/// Resolves `fn`, `module::fn` or `address::module::fn`. Throws TargetNotFound.
FunctionPath resolve_target(std::span<const ast::SourceModule> workspace, std::string_view path);

/// Resolves a call path written inside `from`. Empty when outside the workspace.
std::optional<FunctionPath> resolve_call(std::span<const ast::SourceModule> workspace,
                                         const ast::SourceModule& from, std::string_view call);

DependencyClosure slice(std::span<const ast::SourceModule> workspace, std::string_view target);

/// Throws PreconditionViolated when mode is Inlined and `inlined` is absent.
GenerationContext build_context(const DependencyClosure& closure, ContextMode mode,
                                const std::optional<std::string>& inlined = std::nullopt);

std::vector<FunctionPath> select_targets(std::span<const ast::SourceModule> workspace);

/// Structured text report of a closure.
std::string analyze_report(const DependencyClosure& closure);

} // namespace msgpipe::deps
