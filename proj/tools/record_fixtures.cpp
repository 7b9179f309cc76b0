// SPDX-License-Identifier: Apache-2.0

// Regenerates the replay stores under tests/fixtures/replay from the scripts
// in tests/fixtures/scripts.

#include <filesystem>
#include <iostream>
#include <memory>

#include "msgpipe/agents/agents.hpp"
#include "msgpipe/errors.hpp"
#include "msgpipe/llm/llm.hpp"
#include "msgpipe/orchestrator/orchestrator.hpp"
#include "msgpipe/prover/prover.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace msgpipe;

namespace {

std::shared_ptr<llm::RecordBackend> recorder(const fs::path& script, const fs::path& out)
{
    fs::remove(out);
    auto inner = std::make_shared<llm::ScriptedBackend>(llm::ScriptedBackend::from_file(script.string()));
    return std::make_shared<llm::RecordBackend>(inner, out.string());
}

void record_workspace(const fs::path& root)
{
    auto llm = recorder(root / "scripts/workspace.script", root / "replay/workspace.jsonl");
    auto ws = testing::load_workspace();
    auto config = testing::workspace_run_config();
    config.parallel_agents = false;
    auto prover = prover::make_prover(config.prover);
    auto result = orchestrator::run_suite(ws, config, *llm, *prover);
    std::cout << result.summary.table();

    for (const char* diag : {"diagnostics/01_abort_not_covered_short.txt", "diagnostics/08_unbound_function.txt"}) {
        auto verdict = prover::classify(testing::read_fixture(diag), 1, false, 0, 60, "");
        agents::summarize_error(verdict, *llm);
    }
}

void record_pair(const fs::path& root)
{
    auto llm = recorder(root / "scripts/pair.script", root / "replay/pair.jsonl");
    std::vector<ast::SourceModule> ws{testing::load_module("corpus/pair.move")};
    auto config = testing::pair_run_config();
    config.parallel_agents = false;
    auto prover = prover::make_prover(config.prover);
    auto rec = orchestrator::run_target("0x42::pair::make_pair", ws, config, *llm, *prover);
    std::cout << "pair: " << orchestrator::to_string(rec.outcome) << " round " << rec.round << "\n";
}

} // namespace

int main(int argc, char** argv)
{
    fs::path root = argc > 1 ? fs::path(argv[1]) : fs::path(MSGPIPE_FIXTURES);
    try {
        fs::create_directories(root / "replay");
        record_workspace(root);
        record_pair(root);
    } catch (const std::exception& e) {
        std::cerr << "record_fixtures: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
