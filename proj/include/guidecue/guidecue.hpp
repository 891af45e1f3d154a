#pragma once

// Everything except the network transport (guidecue/replay/server.hpp),
// which pulls in Boost.Beast.

#include "guidecue/analytics.hpp"
#include "guidecue/command_analysis.hpp"
#include "guidecue/config.hpp"
#include "guidecue/cue_engine.hpp"
#include "guidecue/derived_io.hpp"
#include "guidecue/error.hpp"
#include "guidecue/fixture.hpp"
#include "guidecue/geometry.hpp"
#include "guidecue/haptics.hpp"
#include "guidecue/kinematics.hpp"
#include "guidecue/pipeline.hpp"
#include "guidecue/practice.hpp"
#include "guidecue/practice_pose.hpp"
#include "guidecue/replay/controller.hpp"
#include "guidecue/replay/protocol.hpp"
#include "guidecue/session.hpp"
