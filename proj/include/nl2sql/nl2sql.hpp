#pragma once

// Umbrella header for the full pipeline: lexing/parsing/serialization,
// schema loading, repair, dataset handling, backends, and evaluation.

#include "nl2sql/ast.hpp"
#include "nl2sql/backend.hpp"
#include "nl2sql/config.hpp"
#include "nl2sql/corrupt.hpp"
#include "nl2sql/dataset.hpp"
#include "nl2sql/decompose.hpp"
#include "nl2sql/evaluate.hpp"
#include "nl2sql/lexer.hpp"
#include "nl2sql/parser.hpp"
#include "nl2sql/repair.hpp"
#include "nl2sql/schema.hpp"
