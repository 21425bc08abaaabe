// Generated by the protocol buffer compiler.  DO NOT EDIT!
#include "msg.pb.h"

const std::string& User::name() const { return name_; }
