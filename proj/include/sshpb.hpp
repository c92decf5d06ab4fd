#pragma once

#include "sshpb/errors.hpp"
#include "sshpb/operators.hpp"
#include "sshpb/model.hpp"
#include "sshpb/subspaces.hpp"
#include "sshpb/steadystate.hpp"
#include "sshpb/sweeps.hpp"
#include "sshpb/serialize.hpp"
#include "sshpb/config.hpp"
#include "sshpb/cli.hpp"
#include "sshpb/version.hpp"
