int acceptance_stub_main_placeholder; int main(){return 0;}
