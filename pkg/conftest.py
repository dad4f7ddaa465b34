import os
import sys
from pathlib import Path

import django

sys.path.insert(0, str(Path(__file__).resolve().parent / 'walshlab'))
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'walshlab.settings')
django.setup()
