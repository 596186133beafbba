#pragma once

#include "cloudlens/actions.hpp"
#include "cloudlens/attack_graph.hpp"
#include "cloudlens/compile.hpp"
#include "cloudlens/error.hpp"
#include "cloudlens/model.hpp"
#include "cloudlens/partition.hpp"
#include "cloudlens/pddl.hpp"
#include "cloudlens/report.hpp"
#include "cloudlens/scenario.hpp"
#include "cloudlens/search.hpp"
#include "cloudlens/snapshot.hpp"
#include "cloudlens/tuple_text.hpp"
#include "cloudlens/vocabulary.hpp"
