#pragma once
#include <gtest/gtest.h>
#include "tabe/tabe.hpp"
