// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <set>
#include <string_view>

namespace msgpipe {

enum class ClauseClass { AbortsIf, Modifies, Ensures, LoopInvariant };

inline constexpr std::array<ClauseClass, 4> kAllClauseClasses{ClauseClass::AbortsIf, ClauseClass::Modifies,
                                                             ClauseClass::Ensures, ClauseClass::LoopInvariant};

using ClassSet = std::set<ClauseClass>;

inline const char* to_string(ClauseClass c)
{
    switch (c) {
    case ClauseClass::AbortsIf: return "aborts_if";
    case ClauseClass::Modifies: return "modifies";
    case ClauseClass::Ensures: return "ensures";
    case ClauseClass::LoopInvariant: return "loop_invariant";
    }
    return "?";
}

inline std::optional<ClauseClass> clause_class_from_string(std::string_view s)
{
    for (ClauseClass c : kAllClauseClasses)
        if (s == to_string(c))
            return c;
    return std::nullopt;
}

} // namespace msgpipe
