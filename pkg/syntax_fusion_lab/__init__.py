"""Syntax-augmented transformer encoders, trained from scratch at desk scale."""

from dotenv import load_dotenv

load_dotenv()
